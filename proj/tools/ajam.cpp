// ajam: command-line front end for training, evaluating and probing the
// anti-jamming learners.

#include "ajam/config.hpp"
#include "ajam/evaluation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ajam;
using nlohmann::json;

namespace {

struct Args {
  std::string config;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string algo;
  int episodes = -1;
  std::vector<double> eps;
  int runs = -1;
  int seeds = 5;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Stages a subcommand's files in a scratch directory and moves them into
/// place only once everything has been written.
class Staging {
 public:
  Staging(const fs::path& out, const std::string& target) : final_(out / target) {
    fs::create_directories(out);
    std::string flat = target;
    for (char& c : flat)
      if (c == '/') c = '-';
    tmp_ = out / (".staging-" + flat);
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  ~Staging() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }
  const fs::path& dir() const { return tmp_; }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream f(tmp_ / name, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + (tmp_ / name).string());
  }

  void commit() {
    fs::create_directories(final_.parent_path());
    fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
  }

 private:
  fs::path final_;
  fs::path tmp_;
  bool committed_ = false;
};

Config load_config(const Args& a) {
  Config c = a.config.empty() ? Config{} : parse_config_file(a.config);
  if (a.episodes >= 0) {
    c.hyper.episodes = a.episodes;
    c.hyper.validate();
  }
  return c;
}

json manifest(const std::string& sub, const Args& a, const Config& c) {
  json m;
  m["tool"] = "ajam";
  m["version"] = kVersion;
  m["subcommand"] = sub;
  m["config_path"] = a.config;
  m["config_hash"] = hex64(config_hash(c));
  m["seed"] = a.seed;
  m["out"] = a.out;
  return m;
}

fs::path checkpoint_dir(const Args& a, const std::string& algo) { return fs::path(a.out) / "checkpoints" / algo; }

AgentBundle load_bundle(const Args& a, const std::string& algo, const Scenario& sc) {
  const fs::path dir = checkpoint_dir(a, algo);
  if (!fs::exists(dir / "manifest.json"))
    throw std::runtime_error("missing checkpoint for '" + algo + "' in " + dir.string() + " (run train first)");
  std::ifstream f(dir / "manifest.json");
  const json m = json::parse(f);
  AgentBundle b = AgentBundle::load(dir, parse_algorithm(m.at("algorithm").get<std::string>()),
                                    parse_variant(m.at("variant").get<std::string>()), m.at("seed").get<std::uint64_t>());
  b.check_against(sc);
  return b;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int cmd_train(const Args& a) {
  const Config c = load_config(a);
  const std::string algo = a.algo.empty() ? "mt" : a.algo;
  TrainingOptions opt;
  opt.algorithm = parse_algorithm(algo);
  opt.seed = a.seed;
  const int every = std::max(1, c.hyper.episodes / 20);
  opt.on_episode = [&](const EpisodeLog& e) {
    if ((e.episode + 1) % every == 0)
      std::cerr << "[train " << algo << "] episode " << e.episode + 1 << "/" << c.hyper.episodes
                << " throughput " << e.throughput_bits / 1e6 << " Mbit\n";
  };
  const TrainingResult tr = train(c.scenario, c.hyper, opt);

  json m = manifest("train", a, c);
  m["algorithm"] = algo;
  m["variant"] = variant_name(tr.bundle.variant);
  m["episodes"] = c.hyper.episodes;
  m["config"] = config_json(c);
  Staging st(a.out, "checkpoints/" + algo);
  tr.bundle.save(st.dir(), dump(m));
  std::ostringstream log;
  write_training_log_csv(log, tr.log);
  st.write("training_log.csv", log.str());
  st.commit();
  std::cerr << "[train " << algo << "] wrote " << checkpoint_dir(a, algo).string() << "\n";
  return 0;
}

std::unique_ptr<Policy> baseline(const std::string& name, const Scenario& sc, std::uint64_t seed, std::size_t run) {
  if (name == "random") return std::make_unique<RandomPolicy>(sc, derive_seed(seed, Stream::Exploration, run));
  if (name == "greedy") return std::make_unique<GreedyBaseline>(sc);
  return nullptr;
}

int cmd_eval(const Args& a) {
  const Config c = load_config(a);
  const Scenario& sc = c.scenario;
  const std::string algo = a.algo.empty() ? "mt" : a.algo;
  const std::vector<double> eps = a.eps.empty() ? std::vector<double>{0.0} : a.eps;
  const std::size_t runs = a.runs > 0 ? static_cast<std::size_t>(a.runs) : 10;
  std::optional<AgentBundle> bundle;
  if (!baseline(algo, sc, a.seed, 0)) bundle = load_bundle(a, algo, sc);
  const int maxp = sc.radio.n_power_levels() - 1;

  std::vector<EpisodeStats> all;
  std::vector<SweepRow> rows;
  for (double e : eps)
    for (std::size_t r = 0; r < runs; ++r) {
      const RunSeeds s = sweep_seeds(a.seed, r);
      std::unique_ptr<Policy> p = bundle ? std::make_unique<BundlePolicy>(*bundle, maxp) : baseline(algo, sc, a.seed, r);
      EpisodeStats stt = run_episode(*p, sc, e, s.fading, s.perturbation);
      rows.push_back({algo, e, r, stt.cumulative_throughput_bits});
      all.push_back(std::move(stt));
    }
  json m = manifest("eval", a, c);
  m["algorithm"] = algo;
  m["eps"] = eps;
  m["runs"] = runs;
  Staging st(a.out, "eval/" + algo);
  std::ostringstream ep, sum;
  write_episode_csv(ep, sc, all);
  write_sweep_csv(sum, rows);
  st.write("episodes.csv", ep.str());
  st.write("summary.csv", sum.str());
  st.write("manifest.json", dump(m));
  st.commit();
  std::cerr << "[eval " << algo << "] wrote " << (fs::path(a.out) / "eval" / algo).string() << "\n";
  return 0;
}

int cmd_sweep(const Args& a) {
  const Config c = load_config(a);
  const Scenario& sc = c.scenario;
  const std::vector<double> eps = a.eps.empty() ? std::vector<double>{0, 5, 10, 15, 20} : a.eps;
  const std::size_t runs = a.runs > 0 ? static_cast<std::size_t>(a.runs) : 200;
  const std::vector<std::string> algos = split_list(a.algo.empty() ? "mt,pgd,nqc" : a.algo);
  const int maxp = sc.radio.n_power_levels() - 1;

  std::map<std::string, AgentBundle> bundles;
  bundles.emplace("mt", load_bundle(a, "mt", sc));
  for (const auto& n : algos)
    if (!baseline(n, sc, a.seed, 0) && !bundles.count(n)) bundles.emplace(n, load_bundle(a, n, sc));

  std::vector<NamedPolicyFactory> pols;
  for (const auto& n : algos) {
    if (baseline(n, sc, a.seed, 0)) {
      pols.push_back({n, [&, n](std::size_t r) { return baseline(n, sc, a.seed, r); }});
    } else {
      const AgentBundle* b = &bundles.at(n);
      pols.push_back({n, [b, maxp](std::size_t) { return std::make_unique<BundlePolicy>(*b, maxp); }});
    }
  }
  const AgentBundle* mt = &bundles.at("mt");
  const NamedPolicyFactory bench{"mt", [mt, maxp](std::size_t) { return std::make_unique<BundlePolicy>(*mt, maxp); }};
  const SweepResult res = robustness_sweep(pols, bench, sc, eps, runs, a.seed);

  json m = manifest("sweep", a, c);
  m["algorithms"] = algos;
  m["eps"] = eps;
  m["runs"] = runs;
  Staging st(a.out, "sweep");
  std::ostringstream s1, s2, s3;
  write_sweep_csv(s1, res.runs);
  write_accuracy_csv(s2, res.accuracy);
  write_box_csv(s3, res.boxes);
  st.write("sweep.csv", s1.str());
  st.write("accuracy.csv", s2.str());
  st.write("boxstats.csv", s3.str());
  st.write("manifest.json", dump(m));
  st.commit();
  std::cerr << "[sweep] wrote " << (fs::path(a.out) / "sweep").string() << "\n";
  return 0;
}

int cmd_ablate(const Args& a) {
  const Config c = load_config(a);
  const std::size_t runs = a.runs > 0 ? static_cast<std::size_t>(a.runs) : 50;
  if (a.seeds < 1) throw UsageError("--seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < a.seeds; ++i) seeds.push_back(a.seed + static_cast<std::uint64_t>(i));
  const auto rows = ablation_suite(c.scenario, c.hyper, seeds, runs,
                                   [](const std::string& s) { std::cerr << "[ablate] training " << s << "\n"; });
  json m = manifest("ablate", a, c);
  m["seeds"] = seeds;
  m["runs"] = runs;
  m["episodes"] = c.hyper.episodes;
  Staging st(a.out, "ablate");
  std::ostringstream s;
  write_ablation_csv(s, rows);
  st.write("ablation.csv", s.str());
  st.write("manifest.json", dump(m));
  st.commit();
  std::cerr << "[ablate] wrote " << (fs::path(a.out) / "ablate").string() << "\n";
  return 0;
}

int cmd_probe(const Args& a) {
  const Config c = load_config(a);
  const std::size_t pairs = a.runs > 0 ? static_cast<std::size_t>(a.runs) : 1000;
  const double gamma = c.hyper.gamma;
  const ToyMdp mdp = ToyMdp::seeded(a.seed);
  const ContractionReport rep = contraction_probe(mdp, gamma, pairs, a.seed);
  Rng rng = make_rng(a.seed, Stream::Probe, 2);
  double spread = 0.0;
  for (int i = 0; i < 10; ++i) {
    Vector v0(mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s) v0[s] = 200.0 * uniform01(rng) - 100.0;
    const FixedPoint fp = iterate_to_fixed_point(mdp, gamma, v0);
    spread = std::max(spread, (fp.value - rep.fixed_point).cwiseAbs().maxCoeff());
  }
  json r;
  r["gamma"] = gamma;
  r["pairs"] = pairs;
  r["max_ratio"] = rep.max_ratio;
  r["bound"] = gamma;
  r["contraction_holds"] = rep.max_ratio <= gamma + 1e-9;
  r["applications_to_fixed_point"] = rep.applications_to_fixed_point;
  r["fixed_point"] = std::vector<double>(rep.fixed_point.data(), rep.fixed_point.data() + rep.fixed_point.size());
  r["fixed_point_spread_10_inits"] = spread;
  json m = manifest("probe", a, c);
  m["pairs"] = pairs;
  Staging st(a.out, "probe");
  st.write("contraction.json", dump(r));
  st.write("manifest.json", dump(m));
  st.commit();
  std::cout << "max ratio " << format_double(rep.max_ratio) << " (gamma " << format_double(gamma) << "), "
            << rep.applications_to_fixed_point << " applications to fixed point, spread "
            << format_double(spread) << "\n";
  return 0;
}

int cmd_dump_q(const Args& a) {
  const Config c = load_config(a);
  const Scenario& sc = c.scenario;
  const std::string algo = a.algo.empty() ? "nqc" : a.algo;
  const double eps = a.eps.empty() ? sc.uncertainty.eps_per_jammer_w : a.eps.front();
  const AgentBundle b = load_bundle(a, algo, sc);
  const RunSeeds s = sweep_seeds(a.seed, 0);
  const auto rows = q_interval_dump(b, sc, eps, c.hyper.compression, s.fading, s.perturbation);
  json m = manifest("dump-q", a, c);
  m["algorithm"] = algo;
  m["eps"] = eps;
  Staging st(a.out, "dump-q/" + algo);
  std::ostringstream os;
  write_qdump_csv(os, rows);
  st.write("qdump.csv", os.str());
  st.write("manifest.json", dump(m));
  st.commit();
  std::cerr << "[dump-q " << algo << "] wrote " << rows.size() << " records\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-timescale anti-jamming learners: train, evaluate, sweep, ablate, probe"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Args a;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", a.config, "Scenario config file (TOML subset); defaults built in");
    s->add_option("--seed", a.seed, "Master seed");
    s->add_option("--out", a.out, "Output directory");
  };
  auto* train = app.add_subcommand("train", "Train one learner and write a checkpoint");
  common(train);
  train->add_option("--algo", a.algo, "mt | pgd | nqc")->check(CLI::IsMember({"mt", "pgd", "nqc"}));
  train->add_option("--episodes", a.episodes, "Override training.episodes")->check(CLI::NonNegativeNumber);

  auto* eval = app.add_subcommand("eval", "Roll out a checkpoint or baseline and write per-slot traces");
  common(eval);
  eval->add_option("--algo", a.algo, "mt | pgd | nqc | random | greedy")
      ->check(CLI::IsMember({"mt", "pgd", "nqc", "random", "greedy"}));
  eval->add_option("--eps", a.eps, "Per-jammer sensing radii in W (comma separated)")->delimiter(',');
  eval->add_option("--runs", a.runs, "Episodes per radius")->check(CLI::PositiveNumber);

  auto* sweep = app.add_subcommand("sweep", "Robustness sweep and decision accuracy");
  common(sweep);
  sweep->add_option("--algo", a.algo, "Comma-separated policies (mt,pgd,nqc,random,greedy)");
  sweep->add_option("--eps", a.eps, "Per-jammer sensing radii in W (comma separated)")->delimiter(',');
  sweep->add_option("--runs", a.runs, "Runs per radius")->check(CLI::PositiveNumber);

  auto* ablate = app.add_subcommand("ablate", "Train and compare the ablation variants");
  common(ablate);
  ablate->add_option("--episodes", a.episodes, "Override training.episodes")->check(CLI::NonNegativeNumber);
  ablate->add_option("--runs", a.runs, "Evaluation episodes per trained variant")->check(CLI::PositiveNumber);
  ablate->add_option("--seeds", a.seeds, "Number of consecutive training seeds")->check(CLI::PositiveNumber);

  auto* probe = app.add_subcommand("probe", "Contraction probe of the worst-case Bellman operator");
  common(probe);
  probe->add_option("--runs", a.runs, "Random value-function pairs")->check(CLI::PositiveNumber);

  auto* dq = app.add_subcommand("dump-q", "Point Q-values and interval bounds along one rollout");
  common(dq);
  dq->add_option("--algo", a.algo, "mt | pgd | nqc")->check(CLI::IsMember({"mt", "pgd", "nqc"}));
  dq->add_option("--eps", a.eps, "Per-jammer sensing radius in W")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(a);
    if (*eval) return cmd_eval(a);
    if (*sweep) {
      for (const auto& n : split_list(a.algo.empty() ? "mt" : a.algo))
        if (n != "mt" && n != "pgd" && n != "nqc" && n != "random" && n != "greedy")
          throw UsageError("--algo: unknown policy '" + n + "'");
      return cmd_sweep(a);
    }
    if (*ablate) return cmd_ablate(a);
    if (*probe) return cmd_probe(a);
    if (*dq) return cmd_dump_q(a);
  } catch (const UsageError& e) {
    std::cerr << "ajam: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "ajam: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "ajam: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
