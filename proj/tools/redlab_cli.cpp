// redlab: command-line front end for detection, denoising, lattice fitting,
// texture ranking and background sampling.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "redlab/pnm.hpp"
#include "redlab/redlab.hpp"
#include "redlab/serialize.hpp"

namespace fs = std::filesystem;
using namespace redlab;
using Json = nlohmann::json;
namespace rj = redlab::json;

namespace {

constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string threads = "auto";
};

int thread_count(const Common& c) {
  if (c.threads == "auto") return 0;
  try {
    std::size_t used = 0;
    const int n = std::stoi(c.threads, &used);
    if (used == c.threads.size() && n > 0) return n;
  } catch (const std::exception&) {
  }
  throw ValidationError("--threads must be a positive integer or 'auto'");
}

struct PatchSpec {
  int x = 0;
  int y = 0;
  int p = 8;
};

PatchSpec parse_patch(const std::string& s) {
  PatchSpec ps;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d,%d,%d%c", &ps.x, &ps.y, &ps.p, &tail) != 3)
    throw ValidationError("--patch expects x,y,p");
  if (ps.p < 1) throw ValidationError("--patch side must be >= 1");
  return ps;
}

Json input_entry(const std::string& path, const Image& u) {
  return {{"path", path}, {"width", u.width()}, {"height", u.height()}, {"checksum", rj::checksum(u)}};
}

class Output {
 public:
  explicit Output(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (dir_ / name).string();
  }

  void write_json(const std::string& name, const Json& j) {
    std::ofstream out(path(name));
    if (!out) throw ValidationError("cannot write " + name);
    out << j.dump(2) << '\n';
  }

  // Threads are left out on purpose: they never change an output byte.
  void write_manifest(const std::string& command, const Common& c, Json params, Json inputs) {
    files_.push_back("manifest.json");
    Json m{{"schema_version", rj::schema_version},
           {"tool", "redlab"},
           {"subcommand", command},
           {"seed", c.seed},
           {"params", std::move(params)},
           {"inputs", std::move(inputs)},
           {"outputs", files_}};
    std::ofstream out((dir_ / "manifest.json").string());
    if (!out) throw ValidationError("cannot write manifest.json");
    out << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

// Offset maps are written with t = 0 at pixel (w / 2, h / 2).
template <typename T>
Grid<T, OffsetTag> centered_view(const Grid<T, OffsetTag>& g) {
  Grid<T, OffsetTag> out(g.width(), g.height());
  const int cx = g.width() / 2;
  const int cy = g.height() / 2;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) out(x, y) = g.periodic(x - cx, y - cy);
  return out;
}

MicrotextureModel make_model(const std::string& kind, const Image& u) {
  if (kind == "white") return MicrotextureModel::white_noise(u.width(), u.height());
  return MicrotextureModel::from_exemplar(u);
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  std::string input;
  std::string patch = "0,0,8";
  double nfa = 1.0;
  std::string model = "exemplar";
  std::optional<int> mask;
};

int run_detect(const DetectArgs& a, const Common& c) {
  const Image u = pnm::read_pgm(a.input);
  const PatchSpec ps = parse_patch(a.patch);
  const PatchDomain omega = PatchDomain::square({ps.x, ps.y}, ps.p);
  const MicrotextureModel model = make_model(a.model, u);
  std::optional<BinaryMap> mask;
  if (a.mask) mask = stride_mask(u.width(), u.height(), *a.mask);
  DetectionResult r = autosim_detection(u, omega, model, a.nfa, mask ? &*mask : nullptr, thread_count(c));
  r.mask_stride = a.mask;

  Output out(c.out_dir);
  pnm::write_pfm(out.path("P_map.pfm"), centered_view(r.probability));
  pnm::write_mask_pgm(out.path("D_map.pgm"), centered_view(r.detected));
  Json report = rj::detection(r);
  report["origin_pixel"] = Json::array({u.width() / 2, u.height() / 2});
  out.write_json("detection.json", report);
  out.write_manifest("detect", c,
                     {{"patch", {{"x", ps.x}, {"y", ps.y}, {"p", ps.p}}},
                      {"nfa", a.nfa},
                      {"model", a.model},
                      {"mask_stride", a.mask ? Json(*a.mask) : Json(nullptr)}},
                     Json::array({input_entry(a.input, u)}));
  if (r.status == DetectionStatus::trivial_all_detected)
    std::cerr << "warning: nfa_max / |Omega| >= 1, every offset is detected\n";
  std::cout << r.count() << " offsets detected\n";
  return 0;
}

// --------------------------------------------------------------- denoise

struct DenoiseArgs {
  std::string input;
  double sigma = 10.0;
  double nfa = 4.41;
  int p = 8;
  int c = 10;
  std::string mode = "constant";
  std::string method = "threshold";
  double h = 0.0;
  std::optional<std::string> clean;
};

int run_denoise(const DenoiseArgs& a, const Common& c) {
  const Image u = pnm::read_pgm(a.input);
  std::optional<Image> clean;
  if (a.clean) {
    clean = pnm::read_pgm(*a.clean);
    if (clean->width() != u.width() || clean->height() != u.height())
      throw ValidationError("--clean image differs in size from the input");
  }
  DenoiseConfig cfg;
  cfg.sigma = a.sigma;
  cfg.nfa_max = a.nfa;
  cfg.p = a.p;
  cfg.c = a.c;
  cfg.mode = a.mode == "per-offset" ? ThresholdMode::per_offset : ThresholdMode::constant_mean;
  cfg.threads = thread_count(c);
  cfg.validate();

  DenoiseReport r;
  double h = a.h;
  if (a.method == "classic") {
    // Default bandwidth 0.13 sigma |w|.
    if (h <= 0.0) h = 0.13 * a.sigma * static_cast<double>(a.p * a.p);
    r = nlmeans_classic(u, cfg, h);
  } else {
    r = nlmeans_threshold(u, cfg);
  }

  Json report{{"method", a.method}};
  if (clean) {
    r.psnr = psnr(*clean, r.denoised);
    report["psnr"] = rj::number(*r.psnr);
    report["noisy_psnr"] = rj::number(psnr(*clean, u));
  }
  if (a.method == "threshold") report["thresholds"] = rj::thresholds(r.thresholds);
  else report["h"] = h;
  std::map<int, long long> histogram;
  for (int n : r.selected.values()) ++histogram[n];
  Json hist = Json::array();
  for (const auto& [n, count] : histogram) hist.push_back(Json::array({n, count}));
  report["selected_histogram"] = hist;

  Output out(c.out_dir);
  pnm::write_pgm(out.path("denoised.pgm"), r.denoised);
  out.write_json("report.json", report);
  Json inputs = Json::array({input_entry(a.input, u)});
  if (clean) inputs.push_back(input_entry(*a.clean, *clean));
  out.write_manifest("denoise", c,
                     {{"sigma", a.sigma},
                      {"nfa", a.nfa},
                      {"p", a.p},
                      {"c", a.c},
                      {"mode", a.mode},
                      {"method", a.method},
                      {"h", a.method == "classic" ? Json(h) : Json(nullptr)}},
                     inputs);
  if (r.psnr) std::cout << "psnr " << *r.psnr << " dB\n";
  return 0;
}

// --------------------------------------------------------------- lattice

struct LatticeArgs {
  std::string input;
  std::string patch = "0,0,20";
  double nfa = 1.0;
  std::string model = "exemplar";
  std::string preprocess = "none";
  double delta_b = 1e-2;
  double delta_m = 10.0;
  int iterations = 10;
  std::string init = "median";
};

Image overlay(const DetectionResult& det, const LatticeResult& lat) {
  const int w = det.detected.width();
  const int h = det.detected.height();
  const int cx = w / 2;
  const int cy = h / 2;
  Image img(w, h);
  const auto centered = centered_view(det.detected);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = centered(x, y) ? 96.0 : 0.0;
  auto mark = [&](double fx, double fy, double level) {
    const long x = std::lround(fx) + cx;
    const long y = std::lround(fy) + cy;
    if (x >= 0 && x < w && y >= 0 && y < h) img(static_cast<int>(x), static_cast<int>(y)) = level;
  };
  if (lat.fit && !lat.fit->degenerate) {
    const auto& b = lat.fit->basis;
    const double reach = std::hypot(w, h);
    const double shortest = std::max(1e-6, std::min(b.b1.norm(), b.b2.norm()));
    const int k = static_cast<int>(std::min(200.0, std::ceil(reach / shortest))) + 1;
    for (int n = -k; n <= k; ++n)
      for (int m = -k; m <= k; ++m) {
        const Eigen::Vector2d p = m * b.b1 + n * b.b2;
        mark(p.x(), p.y(), 255.0);
      }
  }
  for (Offset v : lat.graph.vertices) mark(v.x, v.y, 176.0);
  return img;
}

int run_lattice(const LatticeArgs& a, const Common& c) {
  const Image raw = pnm::read_pgm(a.input);
  const PatchSpec ps = parse_patch(a.patch);
  const Image u = a.preprocess == "laplacian" ? laplacian(raw) : raw;
  const PatchDomain omega = PatchDomain::square({ps.x, ps.y}, ps.p);
  const DetectionResult det = autosim_detection(u, omega, make_model(a.model, u), a.nfa, nullptr, thread_count(c));
  LatticeParams params;
  params.delta_b = a.delta_b;
  params.delta_m = a.delta_m;
  params.iterations = a.iterations;
  params.init = a.init == "random" ? Init::random : Init::median;
  params.seed = c.seed;
  const LatticeResult lat = extract_lattice(det, params);

  Output out(c.out_dir);
  Json fit = rj::lattice(lat);
  fit["detections"] = det.count();
  fit["origin_pixel"] = Json::array({u.width() / 2, u.height() / 2});
  out.write_json("fit.json", fit);
  pnm::write_pgm(out.path("overlay.pgm"), overlay(det, lat));
  out.write_manifest("lattice", c,
                     {{"patch", {{"x", ps.x}, {"y", ps.y}, {"p", ps.p}}},
                      {"nfa", a.nfa},
                      {"model", a.model},
                      {"preprocess", a.preprocess},
                      {"delta_b", a.delta_b},
                      {"delta_m", a.delta_m},
                      {"iterations", a.iterations},
                      {"init", a.init}},
                     Json::array({input_entry(a.input, raw)}));
  if (!lat.sufficient()) std::cout << "insufficient detections\n";
  else std::cout << "c_per " << lat.c_per << '\n';
  return 0;
}

// ------------------------------------------------------------------ rank

struct RankArgs {
  std::vector<std::string> inputs;
  int anchors = 150;
  int p = 20;
  double nfa = 1.0;
  double delta_b = 1e-2;
  double delta_m = 10.0;
  int iterations = 10;
};

std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(in))
        if (e.is_regular_file() && e.path().extension() == ".pgm") found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(in);
    }
  }
  if (files.empty()) throw ValidationError("no input images");
  return files;
}

int run_rank(const RankArgs& a, const Common& c) {
  const std::vector<std::string> files = expand_inputs(a.inputs);
  std::vector<Image> images;
  Json inputs = Json::array();
  for (const auto& f : files) {
    images.push_back(pnm::read_pgm(f));
    inputs.push_back(input_entry(f, images.back()));
  }
  RankParams params;
  params.anchors = a.anchors;
  params.p = a.p;
  params.nfa_max = a.nfa;
  params.delta_b = a.delta_b;
  params.delta_m = a.delta_m;
  params.iterations = a.iterations;
  params.seed = c.seed;
  params.threads = thread_count(c);
  redlab::detail::require(a.iterations >= 1, "--iters must be >= 1");
  const auto scores = rank_textures(images, params, files);

  Output out(c.out_dir);
  out.write_json("ranking.json", rj::ranking(scores));
  out.write_manifest("rank", c,
                     {{"anchors", a.anchors},
                      {"p", a.p},
                      {"nfa", a.nfa},
                      {"delta_b", a.delta_b},
                      {"delta_m", a.delta_m},
                      {"iterations", a.iterations}},
                     inputs);
  for (const auto& s : scores)
    std::cout << (s.median_c_per ? std::to_string(*s.median_c_per) : std::string("unranked")) << "  " << s.name << '\n';
  return 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
  std::optional<std::string> model_from;
  std::optional<std::string> white;
  std::optional<double> level;
  std::optional<double> gain;
};

int run_sample(const SampleArgs& a, const Common& c) {
  if (a.model_from.has_value() == a.white.has_value())
    throw ValidationError("give exactly one of --model-from and --white");
  std::optional<MicrotextureModel> model;
  Json inputs = Json::array();
  double level = 128.0;
  double gain = 32.0;
  if (a.model_from) {
    const Image u = pnm::read_pgm(*a.model_from);
    model = MicrotextureModel::from_exemplar(u);
    double mean = 0.0;
    for (double v : u.values()) mean += v;
    level = mean / static_cast<double>(u.size());
    gain = 1.0;
    inputs.push_back(input_entry(*a.model_from, u));
  } else {
    int w = 0;
    int h = 0;
    char tail = 0;
    if (std::sscanf(a.white->c_str(), "%dx%d%c", &w, &h, &tail) != 2 || w < 1 || h < 1)
      throw ValidationError("--white expects WxH");
    model = MicrotextureModel::white_noise(w, h);
  }
  if (a.level) level = *a.level;
  if (a.gain) gain = *a.gain;

  const Image s = sample(*model, c.seed);
  Image shown = s;
  for (double& v : shown.values()) v = level + gain * v;

  Output out(c.out_dir);
  pnm::write_pfm(out.path("sample.pfm"), s);
  pnm::write_pgm(out.path("sample.pgm"), shown);
  out.write_manifest("sample", c,
                     {{"model", a.model_from ? "exemplar" : "white"},
                      {"white", a.white ? Json(*a.white) : Json(nullptr)},
                      {"level", level},
                      {"gain", gain}},
                     inputs);
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out,-o", c.out_dir, "Output directory")->capture_default_str();
  sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads or 'auto'")
      ->envname("REDLAB_THREADS")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial redundancy detection and its applications"};
  app.require_subcommand(1);
  Common common;

  DetectArgs da;
  auto* detect = app.add_subcommand("detect", "Detect self-similar offsets of a patch");
  detect->add_option("input", da.input, "Input PGM")->required();
  detect->add_option("--patch", da.patch, "Patch as x,y,p")->capture_default_str();
  detect->add_option("--nfa", da.nfa, "Expected number of false alarms")->capture_default_str();
  detect->add_option("--model", da.model, "Background model")
      ->check(CLI::IsMember({"white", "exemplar"}))
      ->capture_default_str();
  detect->add_option("--mask", da.mask, "Evaluate only offsets on this stride");
  add_common(detect, common);

  DenoiseArgs na;
  auto* denoise = app.add_subcommand("denoise", "NL-means denoising with a-contrario patch selection");
  denoise->add_option("input", na.input, "Noisy PGM")->required();
  denoise->add_option("--sigma", na.sigma, "Noise standard deviation")->capture_default_str();
  denoise->add_option("--nfa", na.nfa, "Expected number of wrongly rejected offsets")->capture_default_str();
  denoise->add_option("--p", na.p, "Patch side")->capture_default_str();
  denoise->add_option("--c", na.c, "Search radius")->capture_default_str();
  denoise->add_option("--mode", na.mode, "Threshold mode")
      ->check(CLI::IsMember({"constant", "per-offset"}))
      ->capture_default_str();
  denoise->add_option("--method", na.method, "Patch weighting")
      ->check(CLI::IsMember({"threshold", "classic"}))
      ->capture_default_str();
  denoise->add_option("--bandwidth", na.h, "Bandwidth h for --method classic (default 0.13 sigma p^2)");
  denoise->add_option("--clean", na.clean, "Reference PGM for PSNR");
  add_common(denoise, common);

  LatticeArgs la;
  auto* lattice = app.add_subcommand("lattice", "Fit a lattice to the detections of a patch");
  lattice->add_option("input", la.input, "Input PGM")->required();
  lattice->add_option("--patch", la.patch, "Patch as x,y,p")->capture_default_str();
  lattice->add_option("--nfa", la.nfa, "Expected number of false alarms")->capture_default_str();
  lattice->add_option("--model", la.model, "Background model")
      ->check(CLI::IsMember({"white", "exemplar"}))
      ->capture_default_str();
  lattice->add_option("--preprocess", la.preprocess, "Image preprocessing")
      ->check(CLI::IsMember({"none", "laplacian"}))
      ->capture_default_str();
  lattice->add_option("--dB", la.delta_b, "Basis regularization")->capture_default_str();
  lattice->add_option("--dM", la.delta_m, "Coefficient regularization")->capture_default_str();
  lattice->add_option("--iters", la.iterations, "Alternate minimization iterations")->capture_default_str();
  lattice->add_option("--init", la.init, "Initial basis")
      ->check(CLI::IsMember({"median", "random"}))
      ->capture_default_str();
  add_common(lattice, common);

  RankArgs ra;
  auto* rank = app.add_subcommand("rank", "Rank textures by periodicity");
  rank->add_option("inputs", ra.inputs, "PGM files or directories of PGM files")->required();
  rank->add_option("--anchors", ra.anchors, "Patches sampled per image")->capture_default_str();
  rank->add_option("--p", ra.p, "Patch side")->capture_default_str();
  rank->add_option("--nfa", ra.nfa, "Expected number of false alarms")->capture_default_str();
  rank->add_option("--dB", ra.delta_b, "Basis regularization")->capture_default_str();
  rank->add_option("--dM", ra.delta_m, "Coefficient regularization")->capture_default_str();
  rank->add_option("--iters", ra.iterations, "Alternate minimization iterations")->capture_default_str();
  add_common(rank, common);

  SampleArgs sa;
  auto* samp = app.add_subcommand("sample", "Draw from a background model");
  samp->add_option("--model-from", sa.model_from, "Exemplar PGM");
  samp->add_option("--white", sa.white, "White noise of size WxH");
  samp->add_option("--level", sa.level, "PGM rendering offset (default: exemplar mean, 128 for white)");
  samp->add_option("--gain", sa.gain, "PGM rendering gain (default: 1, 32 for white)");
  add_common(samp, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_validation;
  }

  try {
    if (*detect) return run_detect(da, common);
    if (*denoise) return run_denoise(na, common);
    if (*lattice) return run_lattice(la, common);
    if (*rank) return run_rank(ra, common);
    if (*samp) return run_sample(sa, common);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_validation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_numerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_validation;
  }
  return exit_validation;
}
