#include "puflab/dataset.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace puflab {

namespace {

constexpr char kMagic[8] = {'P', 'U', 'F', 'C', 'R', 'P', '0', '1'};
constexpr std::size_t kHeaderBytes = 64;
constexpr std::size_t kRecordBytes = 9;

void put_u32(unsigned char* at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) at[i] = static_cast<unsigned char>(v >> (8 * i));
}
void put_u64(unsigned char* at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) at[i] = static_cast<unsigned char>(v >> (8 * i));
}
std::uint32_t get_u32(const unsigned char* at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(at[i]) << (8 * i);
    return v;
}
std::uint64_t get_u64(const unsigned char* at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(at[i]) << (8 * i);
    return v;
}

void check_arch(std::uint32_t tag) {
    if (tag != static_cast<std::uint32_t>(ArchTag::apuf) &&
        tag != static_cast<std::uint32_t>(ArchTag::nmq_ro) &&
        tag != static_cast<std::uint32_t>(ArchTag::xor_nmq_ro))
        throw std::runtime_error("dataset: unknown architecture tag " + std::to_string(tag));
}

} // namespace

const char* arch_name(ArchTag t) {
    switch (t) {
        case ArchTag::apuf: return "apuf";
        case ArchTag::nmq_ro: return "nmq_ro";
        case ArchTag::xor_nmq_ro: return "xor_nmq_ro";
    }
    return "unknown";
}

std::vector<Challenge> CrpDataset::challenges() const {
    std::vector<Challenge> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) out[i].bits = records[i].challenge;
    return out;
}

std::vector<std::uint8_t> CrpDataset::responses() const {
    std::vector<std::uint8_t> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) out[i] = records[i].response;
    return out;
}

void write_dataset(const std::string& path, const CrpDataset& ds) {
    if (ds.header.record_count != ds.records.size())
        throw std::invalid_argument("header record count does not match records");
    check_arch(static_cast<std::uint32_t>(ds.header.arch));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);

    unsigned char h[kHeaderBytes] = {};
    std::memcpy(h, kMagic, 8);
    put_u32(h + 8, ds.header.version);
    put_u32(h + 12, ds.header.n);
    put_u32(h + 16, static_cast<std::uint32_t>(ds.header.arch));
    put_u32(h + 20, ds.header.g);
    put_u32(h + 24, ds.header.k);
    put_u32(h + 28, ds.header.evals_per_challenge);
    put_u64(h + 32, ds.header.seed_digest);
    put_u64(h + 40, ds.header.record_count);
    std::uint64_t temp_bits;
    static_assert(sizeof(double) == 8);
    std::memcpy(&temp_bits, &ds.header.enrollment_temperature, 8);
    put_u64(h + 48, temp_bits);
    out.write(reinterpret_cast<const char*>(h), kHeaderBytes);

    std::vector<unsigned char> buf(ds.records.size() * kRecordBytes);
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        put_u64(buf.data() + i * kRecordBytes, ds.records[i].challenge);
        buf[i * kRecordBytes + 8] = ds.records[i].response;
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

CrpDataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    unsigned char h[kHeaderBytes];
    in.read(reinterpret_cast<char*>(h), kHeaderBytes);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderBytes))
        throw std::runtime_error("dataset: truncated header");
    if (std::memcmp(h, kMagic, 8) != 0) throw std::runtime_error("dataset: bad magic");

    CrpDataset ds;
    ds.header.version = get_u32(h + 8);
    if (ds.header.version != 1)
        throw std::runtime_error("dataset: unsupported version " + std::to_string(ds.header.version));
    ds.header.n = get_u32(h + 12);
    const std::uint32_t tag = get_u32(h + 16);
    check_arch(tag);
    ds.header.arch = static_cast<ArchTag>(tag);
    ds.header.g = get_u32(h + 20);
    ds.header.k = get_u32(h + 24);
    ds.header.evals_per_challenge = get_u32(h + 28);
    ds.header.seed_digest = get_u64(h + 32);
    ds.header.record_count = get_u64(h + 40);
    const std::uint64_t temp_bits = get_u64(h + 48);
    std::memcpy(&ds.header.enrollment_temperature, &temp_bits, 8);

    ds.records.resize(ds.header.record_count);
    std::vector<unsigned char> buf(ds.header.record_count * kRecordBytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
        throw std::runtime_error("dataset: truncated body (count mismatch)");
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        ds.records[i].challenge = get_u64(buf.data() + i * kRecordBytes);
        ds.records[i].response = buf[i * kRecordBytes + 8];
    }
    return ds;
}

void write_dataset_csv(const std::string& path, const CrpDataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "challenge_hex,response\n";
    out << std::hex;
    for (const auto& r : ds.records) out << r.challenge << ',' << std::dec << int(r.response) << std::hex << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

CrpDataset read_dataset_csv(const std::string& path, const DatasetHeader& header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "challenge_hex,response")
        throw std::runtime_error("csv dataset: bad header line");
    CrpDataset ds;
    ds.header = header;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("csv dataset: bad row");
        CrpRecord r;
        r.challenge = std::stoull(line.substr(0, comma), nullptr, 16);
        const int resp = std::stoi(line.substr(comma + 1));
        if (resp != 0 && resp != 1) throw std::runtime_error("csv dataset: response must be 0/1");
        r.response = static_cast<std::uint8_t>(resp);
        ds.records.push_back(r);
    }
    ds.header.record_count = ds.records.size();
    return ds;
}

CrpDataset generate_dataset(const InstanceConfig& config, const GenerateSpec& spec,
                            const EnvironmentCondition& env) {
    config.validate();
    env.validate();
    if (config.n < 64 && spec.n_crps > (1ULL << config.n))
        throw std::invalid_argument("n_crps exceeds the challenge space");

    // unique challenges in draw order
    const std::uint64_t mask = config.n == 64 ? ~0ULL : ((1ULL << config.n) - 1);
    const Rng crng = Rng(spec.challenge_seed.value_or(spec.seed)).fork(0x6368616cULL);
    std::vector<std::uint64_t> picks;
    picks.reserve(spec.n_crps);
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(spec.n_crps * 2);
    for (std::uint64_t draw = 0; picks.size() < spec.n_crps; ++draw) {
        const std::uint64_t c = crng.bits(draw) & mask;
        if (seen.insert(c).second) picks.push_back(c);
    }

    NoiseModel noise;
    noise.sigma_rel = spec.noiseless ? 0.0 : config.sigma_rel;
    noise.rng_seed = Rng(spec.seed).fork(0x6e6f6973ULL).key();

    CrpDataset ds;
    ds.header.n = static_cast<std::uint32_t>(config.n);
    ds.header.arch = spec.arch;
    ds.header.g = spec.arch == ArchTag::apuf ? 0 : static_cast<std::uint32_t>(spec.g);
    ds.header.k = spec.arch == ArchTag::xor_nmq_ro ? static_cast<std::uint32_t>(spec.k) : 1;
    ds.header.evals_per_challenge = 1;
    ds.header.seed_digest = mix64(spec.seed);
    ds.header.record_count = spec.n_crps;
    ds.header.enrollment_temperature = env.enrollment_temperature;
    ds.records.resize(spec.n_crps);

    if (spec.arch == ArchTag::apuf) {
        const ApufInstance inst = make_apuf(spec.seed, config);
        for (std::size_t i = 0; i < picks.size(); ++i) {
            const Challenge c{picks[i]};
            ds.records[i] = {picks[i],
                             static_cast<std::uint8_t>(eval_apuf(inst, c, env, noise, i).response)};
        }
    } else if (spec.arch == ArchTag::nmq_ro) {
        const NmqRoInstance inst = make_nmq_ro(spec.seed, config, spec.g);
        for (std::size_t i = 0; i < picks.size(); ++i) {
            const Challenge c{picks[i]};
            ds.records[i] = {picks[i],
                             static_cast<std::uint8_t>(eval_nmq_ro(inst, c, env, noise, i).response)};
        }
    } else {
        const XorComposition comp = make_xor(spec.seed, config, spec.g, spec.k);
        for (std::size_t i = 0; i < picks.size(); ++i) {
            const Challenge c{picks[i]};
            ds.records[i] = {picks[i],
                             static_cast<std::uint8_t>(eval_xor(comp, c, env, noise, i))};
        }
    }
    return ds;
}

} // namespace puflab
