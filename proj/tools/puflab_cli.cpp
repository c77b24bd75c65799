// puflab: delay-PUF simulation and security-evaluation workbench.
//
// Every subcommand prints the fully resolved configuration (including seeds)
// before its results, so any run can be reproduced from its own output.
// Errors exit nonzero with a single "error: ..." line on stderr.
//
// The default seed is 1 unless the PUFLAB_SEED environment variable is set
// (that variable is the only environment input).

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "puflab/attacks.hpp"
#include "puflab/metrics.hpp"
#include "puflab/sensitivity.hpp"

using namespace puflab;

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("PUFLAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::runtime_error("PUFLAB_SEED is not an unsigned integer: " + std::string(env));
        }
    }
    return 1;
}

ArchTag parse_arch(const std::string& s) {
    if (s == "apuf") return ArchTag::apuf;
    if (s == "nmq_ro") return ArchTag::nmq_ro;
    if (s == "xor_nmq_ro") return ArchTag::xor_nmq_ro;
    throw std::runtime_error("unknown architecture: " + s);
}

InstanceConfig load_config(const std::string& path, int n_override) {
    InstanceConfig cfg;
    if (!path.empty()) cfg = InstanceConfig::parse_file(path);
    if (n_override > 0) cfg.n = n_override;
    return cfg;
}

void print_config(const InstanceConfig& cfg) { std::cout << cfg.describe(); }

ResponseSet to_response_set(const CrpDataset& ds, const std::string& id) {
    ResponseSet rs;
    rs.instance_id = id;
    rs.challenges = ds.challenges();
    rs.bits = ds.responses();
    rs.env.enrollment_temperature = ds.header.enrollment_temperature;
    rs.env.temperature = ds.header.enrollment_temperature;
    rs.draws.resize(ds.records.size());
    std::iota(rs.draws.begin(), rs.draws.end(), 0);
    return rs;
}

void print_report(const AttackReport& report, const std::string& csv_path) {
    std::cout << report.text();
    std::cout << "csv: " << AttackReport::csv_header() << "\n";
    std::cout << "csv: " << report.csv_row() << "\n";
    if (!csv_path.empty()) {
        const bool fresh = !std::ifstream(csv_path).good();
        std::ofstream out(csv_path, std::ios::app);
        if (!out) throw std::runtime_error("cannot open for writing: " + csv_path);
        if (fresh) out << AttackReport::csv_header() << "\n";
        out << report.csv_row() << "\n";
    }
}

// Rebuild the generation spec for a dataset file; the seed itself is not
// stored (only its digest), so the caller must supply it and we verify.
GenerateSpec spec_from_header(const DatasetHeader& h, std::uint64_t seed, bool noiseless) {
    if (h.seed_digest != mix64(seed))
        throw std::runtime_error("seed does not match the dataset's seed digest");
    GenerateSpec spec;
    spec.arch = h.arch;
    spec.g = static_cast<int>(h.g);
    spec.k = static_cast<int>(h.k);
    spec.n_crps = h.record_count;
    spec.seed = seed;
    spec.noiseless = noiseless;
    return spec;
}

struct CommonDatasetArgs {
    std::string path;
    std::size_t test_crps = 2000;
};

SplitDataset load_split(const CommonDatasetArgs& a) {
    const CrpDataset ds = read_dataset(a.path);
    std::cout << "dataset=" << a.path << "\narch=" << arch_name(ds.header.arch)
              << "\nn=" << ds.header.n << "\ng=" << ds.header.g << "\nk=" << ds.header.k
              << "\nrecords=" << ds.header.record_count << "\ntest_crps=" << a.test_crps << "\n";
    return split_dataset(ds, a.test_crps);
}

int run(int argc, char** argv) {
    CLI::App app{"delay-PUF simulation and security-evaluation workbench"};
    app.require_subcommand(1);
    argv = app.ensure_utf8(argv);

    std::string config_path;
    app.add_option("--config", config_path, "instance config file (key=value lines)")
        ->check(CLI::ExistingFile);

    // ---- instance new ----------------------------------------------------
    auto* instance = app.add_subcommand("instance", "instance configuration management");
    instance->require_subcommand(1);
    auto* inew = instance->add_subcommand("new", "write a fresh instance config file");
    InstanceConfig icfg;
    icfg.seed = default_seed();
    std::string inew_out;
    inew->add_option("--out", inew_out, "config file to write");
    inew->add_option("--n", icfg.n, "stages per oscillator (challenge bits)");
    inew->add_option("--mu-ps", icfg.mu_ps, "mean element delay (ps)");
    inew->add_option("--sigma-p", icfg.sigma_p, "process sigma relative to mu");
    inew->add_option("--overhead-ps", icfg.overhead_ps, "challenge-independent overhead (ps)");
    inew->add_option("--kappa-mean", icfg.kappa_mean, "mean temperature coefficient (1/degC)");
    inew->add_option("--kappa-sigma", icfg.kappa_sigma, "temperature coefficient sigma");
    inew->add_option("--sigma-rel", icfg.sigma_rel, "per-evaluation relative jitter sigma");
    inew->add_option("--seed", icfg.seed, "instance seed (default from PUFLAB_SEED, else 1)");
    inew->callback([&] {
        icfg.validate();
        std::cout << "command=instance new\n";
        print_config(icfg);
        if (!inew_out.empty()) {
            std::ofstream out(inew_out);
            if (!out) throw std::runtime_error("cannot open for writing: " + inew_out);
            out << "# puflab instance configuration\n" << icfg.describe();
            std::cout << "written=" << inew_out << "\n";
        }
    });

    // ---- crp generate ----------------------------------------------------
    auto* crp = app.add_subcommand("crp", "challenge-response datasets");
    crp->require_subcommand(1);
    auto* gen = crp->add_subcommand("generate", "generate a CRP dataset file");
    GenerateSpec gspec;
    gspec.seed = default_seed();
    std::string gen_arch = "nmq_ro", gen_out, gen_csv_out;
    std::uint64_t gen_challenge_seed = 0;
    int gen_n = 0;
    double gen_temp = 20.0;
    gen->add_option("--arch", gen_arch, "apuf | nmq_ro | xor_nmq_ro")->capture_default_str();
    gen->add_option("--g", gspec.g, "trap counter final value")->capture_default_str();
    gen->add_option("--k", gspec.k, "XOR members")->capture_default_str();
    gen->add_option("--crps", gspec.n_crps, "records to generate")->capture_default_str();
    gen->add_option("--seed", gspec.seed, "instance+noise+challenge seed");
    auto* gen_cs_opt =
        gen->add_option("--challenge-seed", gen_challenge_seed,
                        "separate challenge stream (same value across instances gives "
                        "shared challenges, e.g. for uniqueness)");
    gen->add_option("--n", gen_n, "override challenge bits from the config");
    gen->add_option("--temperature", gen_temp, "evaluation = enrollment temperature (degC)")
        ->capture_default_str();
    gen->add_flag("--noiseless", gspec.noiseless, "disable per-evaluation jitter");
    gen->add_option("--out", gen_out, "binary dataset path")->required();
    gen->add_option("--csv-out", gen_csv_out, "also export CSV (hex challenge, 0/1 response)");
    gen->callback([&] {
        const InstanceConfig cfg = load_config(config_path, gen_n);
        gspec.arch = parse_arch(gen_arch);
        if (gen_cs_opt->count()) gspec.challenge_seed = gen_challenge_seed;
        EnvironmentCondition env;
        env.temperature = env.enrollment_temperature = gen_temp;
        std::cout << "command=crp generate\narch=" << gen_arch << "\ng=" << gspec.g
                  << "\nk=" << gspec.k << "\ncrps=" << gspec.n_crps
                  << "\nnoiseless=" << (gspec.noiseless ? 1 : 0) << "\ntemperature=" << gen_temp
                  << "\n";
        if (gspec.challenge_seed) std::cout << "challenge_seed=" << *gspec.challenge_seed << "\n";
        print_config(cfg);
        std::cout << "generation_seed=" << gspec.seed << "\n";
        const CrpDataset ds = generate_dataset(cfg, gspec, env);
        write_dataset(gen_out, ds);
        std::cout << "written=" << gen_out << "\nrecords=" << ds.records.size() << "\n";
        if (!gen_csv_out.empty()) {
            write_dataset_csv(gen_csv_out, ds);
            std::cout << "written_csv=" << gen_csv_out << "\n";
        }
    });

    // ---- metrics ----------------------------------------------------------
    auto* metrics = app.add_subcommand("metrics", "uniformity / uniqueness / bit error rate");
    metrics->require_subcommand(1);

    auto* unif = metrics->add_subcommand("uniformity", "normalized Hamming weight of a dataset");
    std::string unif_path;
    unif->add_option("--dataset", unif_path, "binary dataset file")->required()
        ->check(CLI::ExistingFile);
    unif->callback([&] {
        const CrpDataset ds = read_dataset(unif_path);
        std::cout << "command=metrics uniformity\ndataset=" << unif_path
                  << "\nrecords=" << ds.header.record_count << "\nseed_digest=" << ds.header.seed_digest
                  << "\n";
        std::cout << "uniformity=" << uniformity(to_response_set(ds, unif_path)) << "\n";
    });

    auto* uniq = metrics->add_subcommand(
        "uniqueness", "normalized Hamming distance between instances on shared challenges");
    std::vector<std::string> uniq_paths;
    int uniq_instances = 0, uniq_group = 32, uniq_g = 200;
    std::size_t uniq_crps = 100000;
    std::uint64_t uniq_seed = default_seed();
    std::string uniq_arch = "nmq_ro";
    uniq->add_option("--dataset", uniq_paths,
                     "two dataset files generated with the same --challenge-seed");
    uniq->add_option("--instances", uniq_instances,
                     "alternatively: sample this many fresh instances on shared challenges");
    uniq->add_option("--crps", uniq_crps, "challenges per instance (sweep mode)")
        ->capture_default_str();
    uniq->add_option("--arch", uniq_arch, "architecture (sweep mode)")->capture_default_str();
    uniq->add_option("--g", uniq_g, "trap counter final value (sweep mode)")->capture_default_str();
    uniq->add_option("--seed", uniq_seed, "base seed (sweep mode)");
    uniq->add_option("--group-bits", uniq_group, "bits per reported group")->capture_default_str();
    uniq->callback([&] {
        std::cout << "command=metrics uniqueness\ngroup_bits=" << uniq_group << "\n";
        if (uniq_paths.size() == 2) {
            const CrpDataset a = read_dataset(uniq_paths[0]);
            const CrpDataset b = read_dataset(uniq_paths[1]);
            std::cout << "dataset_a=" << uniq_paths[0] << "\ndataset_b=" << uniq_paths[1] << "\n";
            std::cout << "uniqueness="
                      << uniqueness(to_response_set(a, uniq_paths[0]),
                                    to_response_set(b, uniq_paths[1]), uniq_group)
                      << "\n";
            return;
        }
        if (!uniq_paths.empty() || uniq_instances < 2)
            throw std::runtime_error(
                "pass exactly two --dataset files or --instances >= 2 for a fresh sweep");
        const InstanceConfig cfg = load_config(config_path, 0);
        print_config(cfg);
        std::cout << "instances=" << uniq_instances << "\ncrps=" << uniq_crps
                  << "\narch=" << uniq_arch << "\ng=" << uniq_g << "\nbase_seed=" << uniq_seed
                  << "\n";
        EnvironmentCondition env;
        std::vector<ResponseSet> sets;
        sets.reserve(static_cast<std::size_t>(uniq_instances));
        for (int i = 0; i < uniq_instances; ++i) {
            GenerateSpec spec;
            spec.arch = parse_arch(uniq_arch);
            spec.g = uniq_g;
            spec.n_crps = uniq_crps;
            spec.seed = Rng(uniq_seed).fork(static_cast<std::uint64_t>(i)).key();
            spec.challenge_seed = uniq_seed;
            sets.push_back(to_response_set(generate_dataset(cfg, spec, env),
                                           "instance" + std::to_string(i)));
        }
        double sum = 0;
        int pairs = 0;
        std::vector<double> groups;
        for (int i = 0; i < uniq_instances; ++i)
            for (int j = i + 1; j < uniq_instances; ++j) {
                const auto g = uniqueness_groups(sets[static_cast<std::size_t>(i)],
                                                 sets[static_cast<std::size_t>(j)], uniq_group);
                groups.insert(groups.end(), g.begin(), g.end());
                sum += uniqueness(sets[static_cast<std::size_t>(i)],
                                  sets[static_cast<std::size_t>(j)], uniq_group);
                ++pairs;
            }
        std::cout << "pairs=" << pairs << "\nuniqueness=" << sum / pairs
                  << "\ngroup_std=" << sample_std(groups) << "\n";
    });

    auto* ber = metrics->add_subcommand(
        "ber", "re-evaluate an enrolled dataset under noise/temperature and count flips");
    std::string ber_path;
    std::uint64_t ber_seed = default_seed();
    double ber_temp = 20.0;
    int ber_evals = 100, ber_n = 0;
    ber->add_option("--dataset", ber_path, "enrolled dataset (generate with --noiseless)")
        ->required()
        ->check(CLI::ExistingFile);
    ber->add_option("--seed", ber_seed, "generation seed of the dataset (verified against digest)");
    ber->add_option("--temperature", ber_temp, "re-evaluation temperature (degC)")
        ->capture_default_str();
    ber->add_option("--evals", ber_evals, "re-evaluations per challenge")->capture_default_str();
    ber->add_option("--n", ber_n, "override challenge bits from the config");
    ber->callback([&] {
        const CrpDataset ds = read_dataset(ber_path);
        InstanceConfig cfg = load_config(config_path, ber_n);
        cfg.n = static_cast<int>(ds.header.n);
        const GenerateSpec spec = spec_from_header(ds.header, ber_seed, false);
        std::cout << "command=metrics ber\ndataset=" << ber_path << "\narch="
                  << arch_name(spec.arch) << "\ng=" << spec.g << "\nk=" << spec.k
                  << "\ntemperature=" << ber_temp << "\nevals=" << ber_evals << "\n";
        print_config(cfg);
        std::cout << "generation_seed=" << ber_seed << "\n";

        EnvironmentCondition env;
        env.enrollment_temperature = ds.header.enrollment_temperature;
        env.temperature = ber_temp;
        NoiseModel noise;
        noise.sigma_rel = cfg.sigma_rel;
        noise.rng_seed = Rng(spec.seed).fork(0x6e6f6973ULL).key();

        const ResponseSet enrolled = to_response_set(ds, ber_path);
        const auto challenges = ds.challenges();
        std::function<int(std::size_t, std::uint64_t)> reeval;
        std::optional<ApufInstance> apuf;
        std::optional<NmqRoInstance> nmq;
        std::optional<XorComposition> xorc;
        const std::size_t count = ds.records.size();
        const auto draw_of = [count, ber_evals](std::size_t i, std::uint64_t e) {
            return count + e * count + i; // past the draws used at generation
        };
        switch (spec.arch) {
            case ArchTag::apuf:
                apuf = make_apuf(spec.seed, cfg);
                reeval = [&, draw_of](std::size_t i, std::uint64_t e) {
                    return eval_apuf(*apuf, challenges[i], env, noise, draw_of(i, e)).response;
                };
                break;
            case ArchTag::nmq_ro:
                nmq = make_nmq_ro(spec.seed, cfg, spec.g);
                reeval = [&, draw_of](std::size_t i, std::uint64_t e) {
                    return eval_nmq_ro(*nmq, challenges[i], env, noise, draw_of(i, e)).response;
                };
                break;
            case ArchTag::xor_nmq_ro:
                xorc = make_xor(spec.seed, cfg, spec.g, spec.k);
                reeval = [&, draw_of](std::size_t i, std::uint64_t e) {
                    return eval_xor(*xorc, challenges[i], env, noise, draw_of(i, e));
                };
                break;
        }
        const BerReport report = bit_error_rate(enrolled, reeval, env, ber_evals);
        std::cout << "ber=" << report.error_ratio << "\n";
    });

    // ---- auth simulate ------------------------------------------------------
    auto* auth = app.add_subcommand("auth", "authentication-failure simulation");
    auth->require_subcommand(1);
    auto* sim = auth->add_subcommand("simulate", "failure probability for a CRP budget");
    double sim_ber = 0.10;
    int sim_crps = 200, sim_threshold = -1;
    long sim_trials = 1000000;
    std::string sim_rule = "paper";
    std::uint64_t sim_seed = default_seed();
    sim->add_option("--ber", sim_ber, "per-response bit error rate")->capture_default_str();
    sim->add_option("--crps", sim_crps, "responses per authentication")->capture_default_str();
    sim->add_option("--threshold-rule", sim_rule,
                    "paper (floor(crps*(1-ber-0.05))) or fixed (use --threshold)")
        ->capture_default_str();
    sim->add_option("--threshold", sim_threshold, "required correct responses (rule=fixed)");
    sim->add_option("--trials", sim_trials, "Monte-Carlo trials")->capture_default_str();
    sim->add_option("--seed", sim_seed, "Monte-Carlo seed");
    sim->callback([&] {
        int threshold;
        if (sim_rule == "paper")
            threshold = auth_threshold(sim_ber, sim_crps);
        else if (sim_rule == "fixed") {
            if (sim_threshold < 0) throw std::runtime_error("--threshold required with rule=fixed");
            threshold = sim_threshold;
        } else
            throw std::runtime_error("unknown threshold rule: " + sim_rule);
        std::cout << "command=auth simulate\nber=" << sim_ber << "\ncrps=" << sim_crps
                  << "\nthreshold_rule=" << sim_rule << "\ntrials=" << sim_trials
                  << "\nseed=" << sim_seed << "\n";
        std::cout << "threshold=" << threshold << "\n";
        const AuthFailure result =
            auth_failure_probability(sim_ber, sim_crps, threshold, sim_trials, sim_seed);
        std::cout << "exact_failure=" << result.exact << "\nmc_failure=" << result.monte_carlo
                  << "\n";
    });

    // ---- sensitivity map ----------------------------------------------------
    auto* sens = app.add_subcommand("sensitivity", "uniqueness-sensitivity surfaces");
    sens->require_subcommand(1);
    auto* smap = sens->add_subcommand("map", "contour grid for a shipped preset");
    std::string smap_preset, smap_out;
    std::uint64_t smap_instance_seed = default_seed(), smap_direction_seed = 7;
    GridSpec smap_grid;
    smap->add_option("--preset", smap_preset,
                     "apuf | 5-xor-apuf | nmq-ro-g800 | nmq-ro-g200 | 2-xor-nmq-ro-g200 | "
                     "3-xor-nmq-ro-g200")
        ->required();
    smap->add_option("--instance-seed", smap_instance_seed, "entropy-source seed");
    smap->add_option("--direction-seed", smap_direction_seed, "perturbation-direction seed")
        ->capture_default_str();
    smap->add_option("--resolution", smap_grid.resolution, "grid points per axis")
        ->capture_default_str();
    smap->add_option("--challenges", smap_grid.challenges, "challenges per cell")
        ->capture_default_str();
    smap->add_option("--out", smap_out, "contour CSV path (alpha,beta,f)");
    smap->callback([&] {
        const InstanceConfig cfg = load_config(config_path, 0);
        const auto& presets = fig10_presets();
        const auto it = std::find_if(presets.begin(), presets.end(),
                                     [&](const SurfacePreset& p) { return p.name == smap_preset; });
        if (it == presets.end()) throw std::runtime_error("unknown preset: " + smap_preset);
        std::cout << "command=sensitivity map\npreset=" << it->name << "\nrange=" << it->range
                  << "\nresolution=" << smap_grid.resolution
                  << "\nchallenges=" << smap_grid.challenges
                  << "\ninstance_seed=" << smap_instance_seed
                  << "\ndirection_seed=" << smap_direction_seed << "\n";
        print_config(cfg);
        const SensitivityGrid grid =
            run_preset(*it, cfg, smap_instance_seed, smap_direction_seed, smap_grid);
        std::cout << "f_origin=" << grid.f(grid.f.rows() / 2, grid.f.cols() / 2)
                  << "\ngrid_mean=" << grid.grid_mean()
                  << "\nboundary_ring_mean=" << grid.boundary_ring_mean()
                  << "\ncells_below_0.45=" << grid.count_below(0.45)
                  << "\nclamp_warnings=" << grid.clamp_warnings << "\n";
        if (!smap_out.empty()) {
            write_contour_csv(grid, smap_out);
            std::cout << "written=" << smap_out << "\n";
        }
    });

    // ---- attack ---------------------------------------------------------------
    auto* attack = app.add_subcommand("attack", "model-building attacks on a dataset");
    attack->require_subcommand(1);
    std::string report_csv;
    attack->add_option("--report-csv", report_csv, "append the report row to this CSV file");

    CommonDatasetArgs lr_args;
    auto* alr = attack->add_subcommand("lr", "logistic regression on parity features");
    LrConfig lr_cfg;
    lr_cfg.seed = default_seed();
    alr->add_option("--dataset", lr_args.path, "binary dataset file")->required()
        ->check(CLI::ExistingFile);
    alr->add_option("--test-crps", lr_args.test_crps, "held-out tail size")->capture_default_str();
    alr->add_option("--epochs", lr_cfg.epochs, "full-batch epochs")->capture_default_str();
    alr->add_option("--learning-rate", lr_cfg.learning_rate, "step size")->capture_default_str();
    alr->add_option("--seed", lr_cfg.seed, "report seed (training itself is deterministic)");
    alr->callback([&] {
        std::cout << "command=attack lr\nepochs=" << lr_cfg.epochs
                  << "\nlearning_rate=" << lr_cfg.learning_rate << "\nseed=" << lr_cfg.seed << "\n";
        print_report(train_logistic_regression(load_split(lr_args), lr_cfg).report, report_csv);
    });

    CommonDatasetArgs mlp_args;
    auto* amlp = attack->add_subcommand("mlp", "feed-forward network on raw challenge bits");
    MlpAttackConfig mlp_cfg;
    mlp_cfg.train.seed = default_seed();
    amlp->add_option("--dataset", mlp_args.path, "binary dataset file")->required()
        ->check(CLI::ExistingFile);
    amlp->add_option("--test-crps", mlp_args.test_crps, "held-out tail size")->capture_default_str();
    amlp->add_option("--hidden", mlp_cfg.hidden, "hidden layer widths")->capture_default_str();
    amlp->add_option("--max-epochs", mlp_cfg.train.max_epochs, "epoch budget")->capture_default_str();
    amlp->add_option("--batch", mlp_cfg.train.batch_size, "minibatch size")->capture_default_str();
    amlp->add_option("--learning-rate", mlp_cfg.train.learning_rate, "step size")
        ->capture_default_str();
    amlp->add_option("--seed", mlp_cfg.train.seed, "init + shuffle seed");
    amlp->callback([&] {
        std::cout << "command=attack mlp\nmax_epochs=" << mlp_cfg.train.max_epochs
                  << "\nbatch=" << mlp_cfg.train.batch_size
                  << "\nlearning_rate=" << mlp_cfg.train.learning_rate
                  << "\nseed=" << mlp_cfg.train.seed << "\n";
        print_report(train_mlp_attack(load_split(mlp_args), mlp_cfg).report, report_csv);
    });

    CommonDatasetArgs cma_args;
    auto* acma = attack->add_subcommand(
        "cmaes", "evolution-strategy fit to the repeated-evaluation reliability side channel");
    CmaesAttackConfig cma_cfg;
    cma_cfg.seed = default_seed();
    std::uint64_t cma_data_seed = default_seed();
    bool cma_noiseless = false;
    int cma_n = 0;
    acma->add_option("--dataset", cma_args.path, "binary dataset file")->required()
        ->check(CLI::ExistingFile);
    acma->add_option("--test-crps", cma_args.test_crps, "held-out tail size")->capture_default_str();
    acma->add_option("--data-seed", cma_data_seed,
                     "generation seed of the dataset (verified; reliabilities are re-measured)");
    acma->add_option("--evals", cma_cfg.evals_per_challenge, "evaluations per challenge")
        ->capture_default_str();
    acma->add_option("--generations", cma_cfg.max_generations, "generations per restart")
        ->capture_default_str();
    acma->add_option("--restarts", cma_cfg.max_restarts, "restarts on collapse")
        ->capture_default_str();
    acma->add_option("--seed", cma_cfg.seed, "search seed");
    acma->add_flag("--noiseless", cma_noiseless, "suppress jitter (degenerate-channel check)");
    acma->add_option("--n", cma_n, "override challenge bits from the config");
    acma->callback([&] {
        const CrpDataset file = read_dataset(cma_args.path);
        InstanceConfig cfg = load_config(config_path, cma_n);
        cfg.n = static_cast<int>(file.header.n);
        const GenerateSpec spec = spec_from_header(file.header, cma_data_seed, cma_noiseless);
        std::cout << "command=attack cmaes\nevals=" << cma_cfg.evals_per_challenge
                  << "\ngenerations=" << cma_cfg.max_generations
                  << "\nrestarts=" << cma_cfg.max_restarts << "\nseed=" << cma_cfg.seed
                  << "\ndata_seed=" << cma_data_seed << "\n";
        print_config(cfg);
        EnvironmentCondition env;
        env.temperature = env.enrollment_temperature = file.header.enrollment_temperature;
        const ReliabilityCapture cap =
            capture_reliability(cfg, spec, env, cma_cfg.evals_per_challenge);
        for (std::size_t i = 0; i < file.records.size(); ++i)
            if (cap.dataset.records[i].challenge != file.records[i].challenge)
                throw std::runtime_error("dataset does not match --data-seed regeneration");
        std::cout << "dataset=" << cma_args.path << "\narch=" << arch_name(file.header.arch)
                  << "\nrecords=" << file.header.record_count
                  << "\ntest_crps=" << cma_args.test_crps << "\n";
        SplitDataset split = split_dataset(cap.dataset, cma_args.test_crps);
        const std::vector<double> train_rel(cap.ones_fraction.begin(),
                                            cap.ones_fraction.begin() +
                                                static_cast<long>(split.train.records.size()));
        print_report(cmaes_reliability_attack(split, train_rel, cma_cfg).report, report_csv);
    });

    CommonDatasetArgs fr_args;
    auto* afr = attack->add_subcommand("fourier", "low-degree parity-spectrum regression");
    FourierConfig fr_cfg;
    fr_cfg.seed = default_seed();
    afr->add_option("--dataset", fr_args.path, "binary dataset file")->required()
        ->check(CLI::ExistingFile);
    afr->add_option("--test-crps", fr_args.test_crps, "held-out tail size")->capture_default_str();
    afr->add_option("--degree", fr_cfg.degree, "maximum subset size")->capture_default_str();
    afr->add_option("--max-subsets", fr_cfg.max_subsets, "subset budget")->capture_default_str();
    afr->add_option("--seed", fr_cfg.seed, "report seed (estimation is deterministic)");
    afr->callback([&] {
        std::cout << "command=attack fourier\ndegree=" << fr_cfg.degree
                  << "\nmax_subsets=" << fr_cfg.max_subsets << "\nseed=" << fr_cfg.seed << "\n";
        print_report(fourier_low_degree_attack(load_split(fr_args), fr_cfg).report, report_csv);
    });

    // ---- plotdata ------------------------------------------------------------
    auto* plot = app.add_subcommand("plotdata", "headered CSV emitters for the shipped figures");
    plot->require_subcommand(1);
    std::string plot_out;
    plot->add_option("--out", plot_out, "CSV output path")->required();

    auto* fig2 = plot->add_subcommand("fig2", "authentication failure vs CRP budget per BER");
    std::vector<double> fig2_bers = {0.05, 0.10, 0.20, 0.30};
    int fig2_max = 500, fig2_step = 10;
    fig2->add_option("--bers", fig2_bers, "BER sweep values")->capture_default_str();
    fig2->add_option("--max-crps", fig2_max, "largest CRP budget")->capture_default_str();
    fig2->add_option("--step", fig2_step, "CRP budget step")->capture_default_str();
    fig2->callback([&] {
        std::cout << "command=plotdata fig2\nmax_crps=" << fig2_max << "\nstep=" << fig2_step
                  << "\n";
        std::ofstream out(plot_out);
        if (!out) throw std::runtime_error("cannot open for writing: " + plot_out);
        out << "ber,n_crps,threshold,failure_prob\n";
        for (const double b : fig2_bers)
            for (int m = fig2_step; m <= fig2_max; m += fig2_step) {
                const int threshold = auth_threshold(b, m);
                out << b << ',' << m << ',' << threshold << ',' << exact_auth_failure(b, m, threshold)
                    << "\n";
            }
        std::cout << "written=" << plot_out << "\n";
    });

    auto* fig3 = plot->add_subcommand("fig3", "response geometry scatter along the ratio axis");
    std::string fig3_arch = "nmq_ro";
    int fig3_g = 400, fig3_n = 0;
    std::size_t fig3_crps = 1000;
    std::uint64_t fig3_seed = default_seed();
    fig3->add_option("--arch", fig3_arch, "apuf | nmq_ro")->capture_default_str();
    fig3->add_option("--g", fig3_g, "trap counter final value")->capture_default_str();
    fig3->add_option("--crps", fig3_crps, "challenges to plot")->capture_default_str();
    fig3->add_option("--seed", fig3_seed, "instance + challenge seed");
    fig3->add_option("--n", fig3_n, "override challenge bits from the config");
    fig3->callback([&] {
        const InstanceConfig cfg = load_config(config_path, fig3_n);
        std::cout << "command=plotdata fig3\narch=" << fig3_arch << "\ng=" << fig3_g
                  << "\ncrps=" << fig3_crps << "\nseed=" << fig3_seed << "\n";
        print_config(cfg);
        EnvironmentCondition env;
        NoiseModel quiet; // noiseless geometry
        quiet.sigma_rel = 0;
        const auto challenges = random_challenges(Rng(fig3_seed).fork(0x6368616cULL), fig3_crps, cfg.n);
        std::ofstream out(plot_out);
        if (!out) throw std::runtime_error("cannot open for writing: " + plot_out);
        out.precision(12);
        if (fig3_arch == "nmq_ro") {
            const NmqRoInstance inst = make_nmq_ro(fig3_seed, cfg, fig3_g);
            out << "challenge_index,ratio,scaled,response\n";
            for (std::size_t i = 0; i < challenges.size(); ++i) {
                const QuantizerTrace t = eval_nmq_ro(inst, challenges[i], env, quiet, i);
                out << i << ',' << t.ratio << ',' << t.scaled << ',' << t.response << "\n";
            }
        } else if (fig3_arch == "apuf") {
            const ApufInstance inst = make_apuf(fig3_seed, cfg);
            out << "challenge_index,delay_difference,response\n";
            for (std::size_t i = 0; i < challenges.size(); ++i) {
                const ApufResult r = eval_apuf(inst, challenges[i], env, quiet, i);
                out << i << ',' << r.delay_difference << ',' << r.response << "\n";
            }
        } else {
            throw std::runtime_error("fig3 supports apuf or nmq_ro");
        }
        std::cout << "written=" << plot_out << "\n";
    });

    auto* fig5 = plot->add_subcommand("fig5", "BER vs temperature per trap-counter preset");
    std::vector<int> fig5_gs = {100, 200, 400};
    double fig5_tmin = 0, fig5_tmax = 50, fig5_tstep = 10;
    std::size_t fig5_crps = 500;
    int fig5_evals = 20, fig5_n = 0;
    std::uint64_t fig5_seed = default_seed();
    fig5->add_option("--gs", fig5_gs, "trap-counter values")->capture_default_str();
    fig5->add_option("--tmin", fig5_tmin, "lowest temperature")->capture_default_str();
    fig5->add_option("--tmax", fig5_tmax, "highest temperature")->capture_default_str();
    fig5->add_option("--tstep", fig5_tstep, "temperature step")->capture_default_str();
    fig5->add_option("--crps", fig5_crps, "enrolled challenges")->capture_default_str();
    fig5->add_option("--evals", fig5_evals, "re-evaluations per challenge")->capture_default_str();
    fig5->add_option("--seed", fig5_seed, "instance seed");
    fig5->add_option("--n", fig5_n, "override challenge bits from the config");
    fig5->callback([&] {
        const InstanceConfig cfg = load_config(config_path, fig5_n);
        std::cout << "command=plotdata fig5\ncrps=" << fig5_crps << "\nevals=" << fig5_evals
                  << "\nseed=" << fig5_seed << "\n";
        print_config(cfg);
        std::ofstream out(plot_out);
        if (!out) throw std::runtime_error("cannot open for writing: " + plot_out);
        out << "g,temperature,ber\n";
        for (const int g : fig5_gs) {
            GenerateSpec spec;
            spec.arch = ArchTag::nmq_ro;
            spec.g = g;
            spec.n_crps = fig5_crps;
            spec.seed = fig5_seed;
            // enrollment is a single noisy read, like the silicon reference
            EnvironmentCondition enroll_env;
            const CrpDataset enrolled_ds = generate_dataset(cfg, spec, enroll_env);
            const ResponseSet enrolled = to_response_set(enrolled_ds, "g" + std::to_string(g));
            const auto challenges = enrolled_ds.challenges();
            const NmqRoInstance inst = make_nmq_ro(fig5_seed, cfg, g);
            NoiseModel noise;
            noise.sigma_rel = cfg.sigma_rel;
            noise.rng_seed = Rng(fig5_seed).fork(0x6e6f6973ULL).key();
            const std::size_t count = challenges.size();
            for (double t = fig5_tmin; t <= fig5_tmax + 1e-9; t += fig5_tstep) {
                EnvironmentCondition env;
                env.temperature = t;
                const auto reeval = [&](std::size_t i, std::uint64_t e) {
                    return eval_nmq_ro(inst, challenges[i], env, noise, count + e * count + i)
                        .response;
                };
                out << g << ',' << t << ','
                    << bit_error_rate(enrolled, reeval, env, fig5_evals).error_ratio << "\n";
            }
        }
        std::cout << "written=" << plot_out << "\n";
    });

    auto* fig7 = plot->add_subcommand("fig7", "trap-counter stability margins (g minus toggles)");
    int fig7_g = 200, fig7_n = 0;
    std::size_t fig7_crps = 2000;
    std::uint64_t fig7_seed = default_seed();
    fig7->add_option("--g", fig7_g, "trap counter final value")->capture_default_str();
    fig7->add_option("--crps", fig7_crps, "challenges")->capture_default_str();
    fig7->add_option("--seed", fig7_seed, "instance + challenge seed");
    fig7->add_option("--n", fig7_n, "override challenge bits from the config");
    fig7->callback([&] {
        const InstanceConfig cfg = load_config(config_path, fig7_n);
        std::cout << "command=plotdata fig7\ng=" << fig7_g << "\ncrps=" << fig7_crps
                  << "\nseed=" << fig7_seed << "\n";
        print_config(cfg);
        const NmqRoInstance inst = make_nmq_ro(fig7_seed, cfg, fig7_g);
        const auto challenges =
            random_challenges(Rng(fig7_seed).fork(0x6368616cULL), fig7_crps, cfg.n);
        EnvironmentCondition env;
        NoiseModel quiet;
        quiet.sigma_rel = 0;
        std::ofstream out(plot_out);
        if (!out) throw std::runtime_error("cannot open for writing: " + plot_out);
        out << "challenge_index,gap\n";
        for (std::size_t i = 0; i < challenges.size(); ++i)
            out << i << ',' << toggle_gap(inst, challenges[i], env, quiet, i) << "\n";
        std::cout << "written=" << plot_out << "\n";
    });

    auto* fig10 = plot->add_subcommand("fig10", "uniqueness-sensitivity contour for a preset");
    std::string fig10_preset = "apuf";
    std::uint64_t fig10_instance_seed = default_seed(), fig10_direction_seed = 7;
    GridSpec fig10_grid;
    fig10->add_option("--preset", fig10_preset, "preset name (see sensitivity map)")
        ->capture_default_str();
    fig10->add_option("--instance-seed", fig10_instance_seed, "entropy-source seed");
    fig10->add_option("--direction-seed", fig10_direction_seed, "perturbation-direction seed")
        ->capture_default_str();
    fig10->add_option("--resolution", fig10_grid.resolution, "grid points per axis")
        ->capture_default_str();
    fig10->add_option("--challenges", fig10_grid.challenges, "challenges per cell")
        ->capture_default_str();
    fig10->callback([&] {
        const InstanceConfig cfg = load_config(config_path, 0);
        const auto& presets = fig10_presets();
        const auto it = std::find_if(presets.begin(), presets.end(),
                                     [&](const SurfacePreset& p) { return p.name == fig10_preset; });
        if (it == presets.end()) throw std::runtime_error("unknown preset: " + fig10_preset);
        std::cout << "command=plotdata fig10\npreset=" << it->name
                  << "\ninstance_seed=" << fig10_instance_seed
                  << "\ndirection_seed=" << fig10_direction_seed
                  << "\nresolution=" << fig10_grid.resolution
                  << "\nchallenges=" << fig10_grid.challenges << "\n";
        print_config(cfg);
        const SensitivityGrid grid =
            run_preset(*it, cfg, fig10_instance_seed, fig10_direction_seed, fig10_grid);
        write_contour_csv(grid, plot_out);
        std::cout << "clamp_warnings=" << grid.clamp_warnings << "\nwritten=" << plot_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
