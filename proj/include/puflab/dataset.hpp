#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "puflab/puf.hpp"

namespace puflab {

enum class ArchTag : std::uint32_t { apuf = 1, nmq_ro = 2, xor_nmq_ro = 3 };

const char* arch_name(ArchTag t);

// Binary layout, all little-endian, 64-byte header with fixed offsets:
//   0  : magic "PUFCRP01" (8 bytes)
//   8  : u32 format version (= 1)
//   12 : u32 n (challenge bits, <= 64)
//   16 : u32 architecture tag (ArchTag)
//   20 : u32 g (0 for APUF)
//   24 : u32 k (XOR members; 1 otherwise)
//   28 : u32 evals per challenge recorded (1 for plain datasets)
//   32 : u64 seed digest (mix64 of generation seed)
//   40 : u64 record count
//   48 : f64 enrollment temperature (degC)
//   56 : 8 reserved zero bytes
// followed by record_count records of 9 bytes each:
//   u64 challenge (little-endian) + u8 response.
struct DatasetHeader {
    std::uint32_t version = 1;
    std::uint32_t n = 64;
    ArchTag arch = ArchTag::nmq_ro;
    std::uint32_t g = 200;
    std::uint32_t k = 1;
    std::uint32_t evals_per_challenge = 1;
    std::uint64_t seed_digest = 0;
    std::uint64_t record_count = 0;
    double enrollment_temperature = 20.0;
};

struct CrpRecord {
    std::uint64_t challenge = 0;
    std::uint8_t response = 0;

    friend bool operator==(const CrpRecord&, const CrpRecord&) = default;
};

struct CrpDataset {
    DatasetHeader header;
    std::vector<CrpRecord> records;

    std::vector<Challenge> challenges() const;
    std::vector<std::uint8_t> responses() const;
};

void write_dataset(const std::string& path, const CrpDataset& ds);
CrpDataset read_dataset(const std::string& path);

// CSV form: header line "challenge_hex,response", then one row per record.
void write_dataset_csv(const std::string& path, const CrpDataset& ds);
CrpDataset read_dataset_csv(const std::string& path, const DatasetHeader& header);

struct GenerateSpec {
    ArchTag arch = ArchTag::nmq_ro;
    int g = 200;
    int k = 1;
    std::size_t n_crps = 10000;
    std::uint64_t seed = 1;       // instance + noise (+ challenge, by default)
    bool noiseless = false;       // attacks on noiseless targets skip jitter
    std::optional<std::uint64_t> challenge_seed; // shared challenge stream
                                                 // across instances when set
};

// Challenges drawn uniformly without replacement (hash-set dedup, draw order
// preserved); responses from the puf-models evaluators with draw index =
// record position. Deterministic in (config, spec).
CrpDataset generate_dataset(const InstanceConfig& config, const GenerateSpec& spec,
                            const EnvironmentCondition& env);

} // namespace puflab
