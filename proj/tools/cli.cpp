#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ngpp/ngpp.hpp"

namespace ngpp::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::numeric_failure, "SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
}

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  json options = json::object();
  json inputs = json::array();
  std::uint64_t seed = 0;
  bool seed_from_entropy = false;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point clock = std::chrono::steady_clock::now();

  void add_input(const fs::path& path) {
    inputs.push_back({{"path", path.string()}, {"sha256", sha256_hex(io::read_file(path))}});
  }

  json to_json() const {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
    return {{"command", command},
            {"argv", argv},
            {"options", options},
            {"inputs", inputs},
            {"seed", seed},
            {"seed_from_entropy", seed_from_entropy},
            {"version", NGPP_VERSION},
            {"timing", {{"started_utc", utc_timestamp(started)}, {"elapsed_seconds", elapsed}}}};
  }
};

// Fixes the seed and records it so the stored argv replays the same run.
void resolve_seed(Manifest& m, const CLI::Option* flag, std::uint64_t& seed) {
  if (flag->count() == 0) {
    seed = entropy_seed();
    m.seed_from_entropy = true;
    m.argv.push_back("--seed");
    m.argv.push_back(std::to_string(seed));
  }
  m.seed = seed;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      row.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(std::isfinite(v(i)) ? json(v(i)) : json(nullptr));
  return out;
}

fs::path with_suffix(const std::string& prefix, const std::string& suffix) {
  fs::path p(prefix + suffix);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

DataMatrix load_data(const std::string& path) { return DataMatrix(io::read_csv(path).values); }

FitOptions fit_options(double tol, int max_iter, const std::string& gradient, std::uint64_t seed) {
  FitOptions fo;
  fo.tol = tol;
  fo.max_iter = max_iter;
  fo.gradient = parse_gradient(gradient);
  fo.seed = seed;
  return fo;
}

json diagnostics_json(const SeparationEstimate& est) {
  json diag = json::array();
  for (const auto& r : est.diagnostics) {
    diag.push_back({{"iterations", r.iterations},
                    {"final_step", r.final_step},
                    {"converged", r.converged},
                    {"restarts", r.restarts}});
  }
  return diag;
}

std::vector<std::string> numbered_header(const std::string& stem, Index count) {
  std::vector<std::string> h;
  for (Index k = 1; k <= count; ++k) h.push_back(stem + std::to_string(k));
  return h;
}

// ---------------------------------------------------------------- demix

struct FitArgs {
  int d = 0;
  double alpha = 0.8;
  std::string method = "deflation";
  double tol = 1e-9;
  int max_iter = 1000;
  std::string gradient = "stabilized";
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
  std::string out;
};

void add_fit_flags(CLI::App* sub, FitArgs& a, bool need_d) {
  auto* d = sub->add_option("--d", a.d, "Number of signal components")->check(CLI::PositiveNumber);
  if (need_d) d->required();
  sub->add_option("--alpha", a.alpha, "Weight of squared skewness in the index")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--method", a.method, "deflation or symmetric")->check(CLI::IsMember({"deflation", "symmetric"}));
  sub->add_option("--tol", a.tol, "Convergence threshold")->check(CLI::PositiveNumber);
  sub->add_option("--max-iter", a.max_iter, "Iteration cap per row or matrix")->check(CLI::PositiveNumber);
  sub->add_option("--gradient", a.gradient, "stabilized or plain")->check(CLI::IsMember({"stabilized", "plain"}));
  a.seed_flag = sub->add_option("--seed", a.seed, "Seed for every random choice");
}

json fit_args_json(const FitArgs& a) {
  return {{"d", a.d},           {"alpha", a.alpha},       {"method", a.method}, {"tol", a.tol},
          {"max_iter", a.max_iter}, {"gradient", a.gradient}, {"seed", a.seed},     {"out", a.out}};
}

int cmd_demix(const std::string& input, FitArgs& a, Manifest& m, std::ostream& out, std::ostream& err) {
  resolve_seed(m, a.seed_flag, a.seed);
  m.options = fit_args_json(a);
  m.options["input"] = input;
  m.add_input(input);
  const DataMatrix x = load_data(input);
  if (a.d > x.p()) {
    throw UsageError("--d = " + std::to_string(a.d) + " exceeds the " + std::to_string(x.p()) + " data columns");
  }
  const Weights w(a.alpha);
  const SeparationEstimate est =
      fit(x, parse_method(a.method), a.d, w, fit_options(a.tol, a.max_iter, a.gradient, a.seed));
  const Matrix scores = signal_scores(est, x);

  const fs::path w_path = with_suffix(a.out, "_W.csv");
  const fs::path s_path = with_suffix(a.out, "_scores.csv");
  const fs::path r_path = with_suffix(a.out, "_report.json");
  io::write_csv(w_path, est.w);
  io::write_csv(s_path, scores, numbered_header("s", a.d));
  json report = {{"method", a.method},
                 {"alpha", a.alpha},
                 {"n", x.n()},
                 {"p", x.p()},
                 {"d", a.d},
                 {"objectives", vector_json(est.rotation.per_row_objective)},
                 {"near_noise", est.near_noise},
                 {"converged", est.converged()},
                 {"init_fallback", est.init_fallback},
                 {"diagnostics", diagnostics_json(est)},
                 {"files", {{"W", w_path.string()}, {"scores", s_path.string()}}},
                 {"manifest", m.to_json()}};
  write_json(r_path, report);
  if (!est.converged()) err << "warning: some rows did not converge; see " << r_path.string() << "\n";
  out << "wrote " << w_path.string() << "\nwrote " << s_path.string() << "\nwrote " << r_path.string() << "\n";
  return ok;
}

// ---------------------------------------------------------------- dim

struct DimArgs {
  std::string input;
  double alpha = 0.8;
  double level = 0.05;
  int null_samples = 200;
  unsigned threads = 1;
  double tol = 1e-9;
  int max_iter = 1000;
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
  std::string out;
};

int cmd_dim(DimArgs& a, Manifest& m, std::ostream& out) {
  resolve_seed(m, a.seed_flag, a.seed);
  if (!(a.level > 0.0 && a.level < 1.0)) throw UsageError("--level must lie strictly between 0 and 1");
  if (a.null_samples < 20) throw UsageError("--null-samples must be at least 20");
  m.options = {{"input", a.input},   {"alpha", a.alpha},       {"level", a.level}, {"null_samples", a.null_samples},
               {"threads", a.threads}, {"tol", a.tol},         {"max_iter", a.max_iter},
               {"seed", a.seed},     {"out", a.out}};
  m.add_input(a.input);
  const DataMatrix x = load_data(a.input);
  DimensionOptions o;
  o.level = a.level;
  o.null_count = a.null_samples;
  o.seed = a.seed;
  o.threads = std::max(1u, a.threads);
  o.fit = fit_options(a.tol, a.max_iter, "stabilized", a.seed);
  const DimensionReport r = estimate_dimension(x, Weights(a.alpha), o);
  json report = {{"tested_k", r.tested_k},
                 {"observed_G", r.observed_g},
                 {"null_samples", r.null_samples},
                 {"rho", r.rho},
                 {"decision", r.decision},
                 {"level", r.level},
                 {"N", r.null_count},
                 {"redraws", r.redraws},
                 {"unresolved", r.unresolved},
                 {"observed_converged", r.observed_converged},
                 {"manifest", m.to_json()}};
  if (a.out.empty()) {
    out << report.dump(2) << "\n";
  } else {
    const fs::path path = with_suffix(a.out, "_report.json");
    write_json(path, report);
    out << "decision " << r.decision << "\nwrote " << path.string() << "\n";
  }
  return ok;
}

// ---------------------------------------------------------------- asv

struct AsvArgs {
  std::string families;
  std::vector<double> alphas{0.8};
  int p = 0;
  std::string method = "symmetric";
  std::string grid;
  std::string range = "0.5:8:16";
  std::string out;
};

std::vector<double> parse_range(const std::string& text) {
  const auto parts = ngpp::detail::split_top_level(text, ':');
  if (parts.size() != 3) throw UsageError("--range must look like lo:hi:count");
  double lo = 0, hi = 0, count = 0;
  try {
    lo = ngpp::detail::parse_double(parts[0], "--range");
    hi = ngpp::detail::parse_double(parts[1], "--range");
    count = ngpp::detail::parse_double(parts[2], "--range");
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  if (!(lo > 0.0 && hi >= lo && count >= 1 && count == std::floor(count) && count <= 10000)) {
    throw UsageError("--range needs 0 < lo <= hi and a whole count in 1..10000");
  }
  std::vector<double> v;
  for (int i = 0; i < static_cast<int>(count); ++i) v.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return v;
}

int cmd_asv(AsvArgs& a, Manifest& m, std::ostream& out) {
  m.options = {{"families", a.families}, {"alpha", a.alphas}, {"p", a.p},         {"method", a.method},
               {"grid", a.grid},         {"range", a.range},  {"out", a.out}};
  for (double al : a.alphas) {
    if (!(al >= 0.0 && al <= 1.0)) throw UsageError("--alpha values must lie in [0, 1]");
  }
  if (!a.grid.empty()) {
    if (a.grid != "gamma" && a.grid != "exppower") throw UsageError("--grid must be gamma or exppower");
    const std::vector<double> shapes = parse_range(a.range);
    std::ostringstream csv;
    csv << "alpha,lambda1,lambda2,v12_deflation,v12_symmetric\n";
    for (double al : a.alphas) {
      const Weights w(al);
      for (double l1 : shapes) {
        for (double l2 : shapes) {
          auto make = [&](double l) { return a.grid == "gamma" ? Family::gamma(l) : Family::exppower(l); };
          const CumulantProfile c1 = profile_from_family(make(l1)), c2 = profile_from_family(make(l2));
          std::string vd = "nan", vs = "nan";
          try {
            vd = io::format_double(v12(c1, c2, w, Method::deflation));
            vs = io::format_double(v12(c1, c2, w, Method::symmetric));
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::identifiability) throw;
          }
          csv << io::format_double(al) << ',' << io::format_double(l1) << ',' << io::format_double(l2) << ',' << vd
              << ',' << vs << '\n';
        }
      }
    }
    if (a.out.empty()) {
      out << csv.str();
    } else {
      const fs::path grid_path = with_suffix(a.out, "_v12.csv");
      const fs::path r_path = with_suffix(a.out, "_report.json");
      io::write_file_atomic(grid_path, csv.str());
      write_json(r_path, {{"grid", grid_path.string()}, {"manifest", m.to_json()}});
      out << "wrote " << grid_path.string() << "\nwrote " << r_path.string() << "\n";
    }
    return ok;
  }

  std::vector<Family> fams;
  try {
    fams = parse_family_list(a.families);
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  if (fams.empty()) throw UsageError("--families or --grid is required");
  std::vector<CumulantProfile> profiles;
  json names = json::array();
  for (const auto& f : fams) {
    profiles.push_back(profile_from_family(f));
    names.push_back(f.name());
  }
  const Index d = static_cast<Index>(profiles.size());
  const Index p = a.p == 0 ? d : a.p;
  if (p < d) throw UsageError("--p must be at least the number of families");
  const Method method = parse_method(a.method);
  json tables = json::array();
  for (double al : a.alphas) {
    const Weights w(al);
    const AsvTable t = asv_entries(profiles, w, p);
    tables.push_back({{"alpha", al},
                      {"A", vector_json(t.a)},
                      {"B", matrix_json(t.b)},
                      {"D", vector_json(t.d)},
                      {"zeta3", vector_json(t.zeta3)},
                      {"zeta4", vector_json(t.zeta4)},
                      {"zeta34", vector_json(t.zeta34)},
                      {"trPhi1", t.tr_phi1(method)},
                      {"trPhi1_deflation", t.tr_phi1_deflation},
                      {"trPhi1_symmetric", t.tr_phi1_symmetric},
                      {"trPhi2", t.tr_phi2},
                      {"expected_nddsq",
                       {{"deflation", t.tr_phi1_deflation - t.d.sum() + t.tr_phi2},
                        {"symmetric", t.tr_phi1_symmetric - t.d.sum() + t.tr_phi2}}}});
  }
  json report = {{"families", names}, {"p", p}, {"method", a.method}, {"tables", tables}, {"manifest", m.to_json()}};
  if (a.out.empty()) {
    out << report.dump(2) << "\n";
  } else {
    const fs::path path = with_suffix(a.out, "_report.json");
    write_json(path, report);
    out << "wrote " << path.string() << "\n";
  }
  return ok;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string config;
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
  unsigned threads = 0;
  std::string out;
};

bool config_sets_seed(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string_view v(line);
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    const auto eq = v.find('=');
    if (eq != std::string_view::npos && ngpp::detail::trim(v.substr(0, eq)) == "seed") return true;
  }
  return false;
}

int cmd_simulate(SimulateArgs& a, Manifest& m, std::ostream& out) {
  m.add_input(a.config);
  const std::string text = io::read_file(a.config);
  std::istringstream in(text);
  ReplicationConfig cfg = parse_replication_config(in);
  if (a.seed_flag->count() > 0) {
    cfg.seed = a.seed;
  } else if (!config_sets_seed(text)) {
    resolve_seed(m, a.seed_flag, a.seed);
    cfg.seed = a.seed;
  }
  m.seed = cfg.seed;
  if (a.threads > 0) cfg.threads = a.threads;
  std::vector<std::string> signal_names;
  for (const auto& f : cfg.spec.signals) signal_names.push_back(f.name());
  std::vector<std::string> methods;
  for (Method me : cfg.methods) methods.push_back(to_string(me));
  m.options = {{"config", a.config},         {"signals", signal_names},        {"noise_dims", cfg.spec.noise_dims},
               {"sample_sizes", cfg.sample_sizes}, {"methods", methods},        {"alphas", cfg.alphas},
               {"reps", cfg.reps},            {"seed", cfg.seed},               {"tol", cfg.fit.tol},
               {"max_iter", cfg.fit.max_iter}, {"threads", cfg.threads},        {"out", a.out}};

  const auto rows = run_replications(cfg);
  std::vector<CumulantProfile> profiles;
  for (const auto& f : cfg.spec.signals) profiles.push_back(profile_from_family(f));

  std::ostringstream csv;
  csv << "method,alpha,n,noise_dims,mean_nddsq,stderr,failures\n";
  json jrows = json::array();
  for (const auto& r : rows) {
    csv << to_string(r.method) << ',' << io::format_double(r.alpha) << ',' << r.n << ',' << r.noise_dims << ','
        << io::format_double(r.mean_nddsq) << ',' << io::format_double(r.stderr_nddsq) << ',' << r.failures << '\n';
    double expected = std::numeric_limits<double>::quiet_NaN();
    try {
      expected = expected_ndd2(profiles, Weights(r.alpha), cfg.spec.p(), r.method);
    } catch (const Error&) {
    }
    json row = {{"method", to_string(r.method)},
                {"alpha", r.alpha},
                {"n", r.n},
                {"noise_dims", r.noise_dims},
                {"mean_nddsq", std::isfinite(r.mean_nddsq) ? json(r.mean_nddsq) : json(nullptr)},
                {"stderr", std::isfinite(r.stderr_nddsq) ? json(r.stderr_nddsq) : json(nullptr)},
                {"failures", r.failures},
                {"used", r.used},
                {"expected_nddsq", std::isfinite(expected) ? json(expected) : json(nullptr)}};
    if (cfg.keep_values) {
      json values = json::array();
      for (double v : r.values) values.push_back(std::isfinite(v) ? json(v) : json(nullptr));
      row["values"] = values;
    }
    jrows.push_back(std::move(row));
  }
  if (a.out.empty()) {
    out << csv.str();
    return ok;
  }
  const fs::path csv_path = with_suffix(a.out, "_summary.csv");
  const fs::path json_path = with_suffix(a.out, "_summary.json");
  io::write_file_atomic(csv_path, csv.str());
  write_json(json_path, {{"rows", jrows}, {"manifest", m.to_json()}});
  out << "wrote " << csv_path.string() << "\nwrote " << json_path.string() << "\n";
  return ok;
}

// ---------------------------------------------------------------- images

std::vector<io::GreyImage> read_images(const std::vector<std::string>& files, Manifest& m) {
  std::vector<io::GreyImage> imgs;
  for (const auto& f : files) {
    m.add_input(f);
    imgs.push_back(io::read_pgm(f));
  }
  for (const auto& img : imgs) {
    if (img.width != imgs.front().width || img.height != imgs.front().height) {
      throw UsageError("all images must have the same size");
    }
  }
  return imgs;
}

io::GreyImage column_image(const Matrix& m, Index col, const io::GreyImage& shape) {
  io::GreyImage img{shape.width, shape.height, {}};
  img.pixels.assign(m.col(col).data(), m.col(col).data() + m.rows());
  return img;
}

struct ImagesMixArgs {
  std::vector<std::string> files;
  int noise = 2;
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
  std::string out;
};

int cmd_images_mix(ImagesMixArgs& a, Manifest& m, std::ostream& out) {
  resolve_seed(m, a.seed_flag, a.seed);
  m.options = {{"files", a.files}, {"noise", a.noise}, {"seed", a.seed}, {"out", a.out}};
  const auto imgs = read_images(a.files, m);
  const Index n = static_cast<Index>(imgs.front().pixels.size());
  const Index k = static_cast<Index>(imgs.size());
  const Index p = k + a.noise;
  if (n < p + 1) throw UsageError("images have fewer pixels than channels");
  Matrix z(n, p);
  for (Index j = 0; j < k; ++j) {
    Vector col = Eigen::Map<const Vector>(imgs[static_cast<std::size_t>(j)].pixels.data(), n);
    col.array() -= col.mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    if (!(sd > 0.0)) throw Error(ErrorKind::degenerate_sample, a.files[static_cast<std::size_t>(j)] + " is constant");
    z.col(j) = col / sd;
  }
  for (Index j = k; j < p; ++j) {
    Rng rng = make_rng(a.seed, {0x1a6e, static_cast<std::uint64_t>(j)});
    z.col(j) = standard_normal(n, 1, rng);
  }
  Rng mix_rng = make_rng(a.seed, {0x313});
  const Matrix omega = standard_normal(p, p, mix_rng);
  const Matrix x = z * omega.transpose();
  json files = json::array();
  for (Index j = 0; j < p; ++j) {
    const fs::path path = with_suffix(a.out, "_mixed_" + std::to_string(j + 1) + ".pgm");
    io::write_pgm(path, column_image(x, j, imgs.front()));
    files.push_back(path.string());
    out << "wrote " << path.string() << "\n";
  }
  const fs::path mix_path = with_suffix(a.out, "_mixing.csv");
  io::write_csv(mix_path, omega);
  const fs::path r_path = with_suffix(a.out, "_report.json");
  write_json(r_path, {{"mixed", files}, {"mixing", mix_path.string()}, {"signals", k}, {"noise", a.noise},
                      {"manifest", m.to_json()}});
  out << "wrote " << mix_path.string() << "\nwrote " << r_path.string() << "\n";
  return ok;
}

int cmd_images_demix(const std::vector<std::string>& files, FitArgs& a, Manifest& m, std::ostream& out,
                     std::ostream& err) {
  resolve_seed(m, a.seed_flag, a.seed);
  m.options = fit_args_json(a);
  m.options["files"] = files;
  const auto imgs = read_images(files, m);
  const Index n = static_cast<Index>(imgs.front().pixels.size());
  const Index p = static_cast<Index>(imgs.size());
  if (a.d > p) throw UsageError("--d exceeds the number of images");
  Matrix x(n, p);
  for (Index j = 0; j < p; ++j) x.col(j) = Eigen::Map<const Vector>(imgs[static_cast<std::size_t>(j)].pixels.data(), n);
  const DataMatrix data(std::move(x));
  const Weights w(a.alpha);
  const FitOptions fo = fit_options(a.tol, a.max_iter, a.gradient, a.seed);
  const SeparationEstimate est = fit(data, parse_method(a.method), a.d, w, fo);
  const Vector scree = screeplot_values(data, w, fo);
  const Matrix scores = signal_scores(est, data);
  json outputs = json::array();
  for (Index k = 0; k < a.d; ++k) {
    const fs::path path = with_suffix(a.out, "_est_" + std::to_string(k + 1) + ".pgm");
    io::write_pgm(path, column_image(scores, k, imgs.front()));
    outputs.push_back(path.string());
    out << "wrote " << path.string() << "\n";
  }
  const fs::path w_path = with_suffix(a.out, "_W.csv");
  io::write_csv(w_path, est.w);
  const fs::path r_path = with_suffix(a.out, "_report.json");
  write_json(r_path, {{"objectives", vector_json(est.rotation.per_row_objective)},
                      {"screeplot", vector_json(scree)},
                      {"n", n},
                      {"converged", est.converged()},
                      {"diagnostics", diagnostics_json(est)},
                      {"images", outputs},
                      {"W", w_path.string()},
                      {"manifest", m.to_json()}});
  if (!est.converged()) err << "warning: some rows did not converge\n";
  out << "wrote " << w_path.string() << "\nwrote " << r_path.string() << "\n";
  return ok;
}

// ---------------------------------------------------------------- mdi

int cmd_mdi(const std::string& w_path, const std::string& omega_path, const std::string& out_prefix, Manifest& m,
            std::ostream& out) {
  m.options = {{"w", w_path}, {"omega", omega_path}, {"out", out_prefix}};
  m.add_input(w_path);
  m.add_input(omega_path);
  const MdiResult r = mdi(io::read_csv(w_path).values, io::read_csv(omega_path).values);
  json report = {{"value", r.value},
                 {"permutation", r.permutation},
                 {"scales", vector_json(r.scales)},
                 {"gain", matrix_json(r.gain)},
                 {"manifest", m.to_json()}};
  if (out_prefix.empty()) {
    out << report.dump(2) << "\n";
  } else {
    const fs::path path = with_suffix(out_prefix, "_mdi.json");
    write_json(path, report);
    out << "wrote " << path.string() << "\n";
  }
  return ok;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::string signals;
  int noise_dims = 0;
  int n = 1000;
  std::string mixing = "identity";
  std::uint64_t seed = 0;
  CLI::Option* seed_flag = nullptr;
  std::string out;
};

int cmd_sample(SampleArgs& a, Manifest& m, std::ostream& out) {
  resolve_seed(m, a.seed_flag, a.seed);
  m.options = {{"signals", a.signals}, {"noise_dims", a.noise_dims}, {"n", a.n},
               {"mixing", a.mixing},   {"seed", a.seed},             {"out", a.out}};
  SourceSpec spec;
  try {
    spec.signals = parse_family_list(a.signals);
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  spec.noise_dims = a.noise_dims;
  if (a.mixing == "identity") {
    spec.mixing.kind = Mixing::Kind::identity;
  } else if (a.mixing == "random") {
    spec.mixing.kind = Mixing::Kind::random;
    spec.mixing.seed = a.seed;
  } else {
    m.add_input(a.mixing);
    spec.mixing.kind = Mixing::Kind::given;
    spec.mixing.matrix = io::read_csv(a.mixing).values;
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::invalid_argument) throw UsageError(e.detail());
    throw;
  }
  const ModelSample s = sample_model(spec, a.n, a.seed);
  const fs::path x_path = with_suffix(a.out, "_X.csv");
  const fs::path l_path = with_suffix(a.out, "_latent.csv");
  const fs::path o_path = with_suffix(a.out, "_Omega.csv");
  const fs::path r_path = with_suffix(a.out, "_report.json");
  io::write_csv(x_path, s.x.values(), numbered_header("x", spec.p()));
  io::write_csv(l_path, s.latent, numbered_header("z", spec.p()));
  io::write_csv(o_path, s.omega);
  write_json(r_path, {{"X", x_path.string()}, {"latent", l_path.string()}, {"Omega", o_path.string()},
                      {"manifest", m.to_json()}});
  out << "wrote " << x_path.string() << "\nwrote " << l_path.string() << "\nwrote " << o_path.string()
      << "\nwrote " << r_path.string() << "\n";
  return ok;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse_error:
    case ErrorKind::dimension_mismatch:
    case ErrorKind::degenerate_sample:
    case ErrorKind::invalid_argument: return data;
    default: return numeric;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projection pursuit for non-Gaussian signal separation", "ngpp"};
  app.set_version_flag("--version", NGPP_VERSION);
  app.require_subcommand(1);

  std::string demix_input;
  FitArgs demix_args;
  auto* demix = app.add_subcommand("demix", "Estimate an unmixing matrix from a CSV data file");
  demix->add_option("input", demix_input, "n x p data CSV")->required();
  add_fit_flags(demix, demix_args, true);
  demix->add_option("--out", demix_args.out, "Output prefix")->required();

  DimArgs dim_args;
  auto* dim = app.add_subcommand("dim", "Monte-Carlo test for the signal dimension");
  dim->add_option("input", dim_args.input, "n x p data CSV")->required();
  dim->add_option("--alpha", dim_args.alpha)->check(CLI::Range(0.0, 1.0));
  dim->add_option("--level", dim_args.level, "Significance level");
  dim->add_option("--null-samples", dim_args.null_samples, "Null replicates per step");
  dim->add_option("--threads", dim_args.threads, "Worker threads for null replicates");
  dim->add_option("--tol", dim_args.tol)->check(CLI::PositiveNumber);
  dim->add_option("--max-iter", dim_args.max_iter)->check(CLI::PositiveNumber);
  dim_args.seed_flag = dim->add_option("--seed", dim_args.seed);
  dim->add_option("--out", dim_args.out, "Output prefix (JSON to stdout when absent)");

  AsvArgs asv_args;
  auto* asv = app.add_subcommand("asv", "Limiting variances for given source families");
  asv->add_option("--families", asv_args.families, "Comma-separated family list, e.g. uniform,gamma(2)");
  asv->add_option("--alpha", asv_args.alphas, "One or more alpha values")->delimiter(',');
  asv->add_option("--p", asv_args.p, "Total dimension (defaults to the number of families)");
  asv->add_option("--method", asv_args.method)->check(CLI::IsMember({"deflation", "symmetric"}));
  asv->add_option("--grid", asv_args.grid, "V12 grid over a shape family: gamma or exppower");
  asv->add_option("--range", asv_args.range, "Shape range lo:hi:count for --grid");
  asv->add_option("--out", asv_args.out, "Output prefix (stdout when absent)");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Replication study from a key = value config file");
  simulate->add_option("config", sim_args.config)->required();
  sim_args.seed_flag = simulate->add_option("--seed", sim_args.seed, "Overrides the config seed");
  simulate->add_option("--threads", sim_args.threads, "Overrides the config thread count");
  simulate->add_option("--out", sim_args.out, "Output prefix (CSV to stdout when absent)");

  auto* images = app.add_subcommand("images", "Image mixing and demixing on ASCII PGM files");
  images->require_subcommand(1);
  ImagesMixArgs mix_args;
  auto* mix = images->add_subcommand("mix", "Mix images with Gaussian noise images");
  mix->add_option("files", mix_args.files)->required();
  mix->add_option("--noise", mix_args.noise, "Number of Gaussian noise images")->check(CLI::NonNegativeNumber);
  mix_args.seed_flag = mix->add_option("--seed,--mixing-seed", mix_args.seed);
  mix->add_option("--out", mix_args.out)->required();
  std::vector<std::string> demix_files;
  FitArgs img_args;
  auto* img_demix = images->add_subcommand("demix", "Estimate signal images from mixed images");
  img_demix->add_option("files", demix_files)->required();
  add_fit_flags(img_demix, img_args, true);
  img_demix->add_option("--out", img_args.out)->required();

  std::string mdi_w, mdi_omega, mdi_out;
  auto* mdi_cmd = app.add_subcommand("mdi", "Minimum distance index of an unmixing estimate");
  mdi_cmd->add_option("--w", mdi_w, "d x p estimate CSV")->required();
  mdi_cmd->add_option("--omega", mdi_omega, "p x p mixing matrix CSV")->required();
  mdi_cmd->add_option("--out", mdi_out, "Output prefix (stdout when absent)");

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Draw a data set from the signal-plus-noise model");
  sample->add_option("--signals", sample_args.signals, "Comma-separated non-Gaussian families");
  sample->add_option("--noise-dims", sample_args.noise_dims)->check(CLI::NonNegativeNumber);
  sample->add_option("--n", sample_args.n)->check(CLI::PositiveNumber);
  sample->add_option("--mixing", sample_args.mixing, "identity, random or a p x p CSV");
  sample_args.seed_flag = sample->add_option("--seed", sample_args.seed);
  sample->add_option("--out", sample_args.out)->required();

  std::string replay_report;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a report manifest");
  replay->add_option("report", replay_report)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  Manifest m;
  m.argv = args;
  try {
    if (demix->parsed()) {
      m.command = "demix";
      return cmd_demix(demix_input, demix_args, m, out, err);
    }
    if (dim->parsed()) {
      m.command = "dim";
      return cmd_dim(dim_args, m, out);
    }
    if (asv->parsed()) {
      m.command = "asv";
      return cmd_asv(asv_args, m, out);
    }
    if (simulate->parsed()) {
      m.command = "simulate";
      return cmd_simulate(sim_args, m, out);
    }
    if (mix->parsed()) {
      m.command = "images mix";
      return cmd_images_mix(mix_args, m, out);
    }
    if (img_demix->parsed()) {
      m.command = "images demix";
      return cmd_images_demix(demix_files, img_args, m, out, err);
    }
    if (mdi_cmd->parsed()) {
      m.command = "mdi";
      return cmd_mdi(mdi_w, mdi_omega, mdi_out, m, out);
    }
    if (sample->parsed()) {
      m.command = "sample";
      return cmd_sample(sample_args, m, out);
    }
    if (replay->parsed()) {
      json report;
      try {
        report = json::parse(io::read_file(replay_report));
      } catch (const json::exception& e) {
        throw Error(ErrorKind::parse_error, replay_report + ": " + e.what());
      }
      if (!report.contains("manifest") || !report["manifest"].contains("argv")) {
        throw Error(ErrorKind::parse_error, replay_report + " has no manifest argv");
      }
      const auto argv = report["manifest"]["argv"].get<std::vector<std::string>>();
      if (!argv.empty() && argv.front() == "replay") throw UsageError("refusing to replay a replay");
      return run(argv, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return usage;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return data;
  }
  err << "no command given\n";
  return usage;
}

}  // namespace ngpp::cli
