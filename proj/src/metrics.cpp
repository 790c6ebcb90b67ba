#include "rbsr/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rbsr {

namespace {

void require_same(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

template <class T>
double mean_squared(std::span<const T> a, std::span<const T> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    s += d * d;
  }
  return s / double(a.size());
}

double psnr_from_mse(double m, double peak) {
  if (!(peak > 0.0))
    throw std::invalid_argument("psnr: peak must be positive");
  if (m == 0.0)
    return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

}  // namespace

double mse(const ImageTensor& a, const ImageTensor& b) {
  require_same(a, b, "mse");
  return mean_squared<float>(a.data, b.data);
}

double mean_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  require_same(a, b, "mean_abs_diff");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(double(a.data[i]) - double(b.data[i]));
  return s / double(a.data.size());
}

double psnr(const ImageTensor& a, const ImageTensor& b, double peak) { return psnr_from_mse(mse(a, b), peak); }

double psnr(std::span<const double> a, std::span<const double> b, double peak) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("psnr: sample counts differ or are zero");
  return psnr_from_mse(mean_squared<double>(a, b), peak);
}

std::vector<double> gaussian_window_1d(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[std::size_t(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += w[std::size_t(i)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

namespace {

// Valid-region separable filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& k) {
  const int n = int(k.size());
  const int oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(std::size_t(h) * ow), out(std::size_t(oh) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[std::size_t(i)] * src[std::size_t(y) * w + x + i];
      tmp[std::size_t(y) * ow + x] = s;
    }
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[std::size_t(i)] * tmp[std::size_t(y + i) * ow + x];
      out[std::size_t(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b, const SsimConfig& cfg) {
  require_same(a, b, "ssim");
  if (cfg.window < 1 || cfg.window % 2 == 0)
    throw std::invalid_argument("ssim: window must be odd");
  if (!(cfg.k1 > 0.0 && cfg.k2 > 0.0))
    throw std::invalid_argument("ssim: k1 and k2 must be positive");
  if (a.height < cfg.window || a.width < cfg.window)
    throw std::invalid_argument("ssim: image smaller than window");

  const auto k = gaussian_window_1d(cfg.window, cfg.window_sigma);
  const double c1 = (cfg.k1 * cfg.peak) * (cfg.k1 * cfg.peak);
  const double c2 = (cfg.k2 * cfg.peak) * (cfg.k2 * cfg.peak);
  const std::size_t n = a.plane();

  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
    const auto ca = a.channel(c), cb = b.channel(c);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = ca[i];
      pb[i] = cb[i];
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, a.height, a.width, k);
    const auto mu_b = filter_valid(pb, a.height, a.width, k);
    const auto e_aa = filter_valid(aa, a.height, a.width, k);
    const auto e_bb = filter_valid(bb, a.height, a.width, k);
    const auto e_ab = filter_valid(ab, a.height, a.width, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma;
      const double vb = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += sum / double(mu_a.size());
  }
  return total / a.channels;
}

std::vector<PairMetrics> evaluate_pairs(const std::vector<PathPair>& pairs, double peak, const SsimConfig& config) {
  std::vector<PairMetrics> rows(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairMetrics& row = rows[i];
    row.name = pairs[i].first.filename().string();
    try {
      const ImageTensor out = load_image(pairs[i].first);
      const ImageTensor ref = load_image(pairs[i].second);
      SsimConfig cfg = config;
      cfg.peak = peak;
      row.psnr = psnr(out, ref, peak);
      row.ssim = ssim(out, ref, cfg);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }
  return rows;
}

std::string format_metric(double v) {
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  if (std::isnan(v))
    return "nan";
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"')
      q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

}  // namespace

std::string metrics_csv(const std::vector<PairMetrics>& rows) {
  std::ostringstream out;
  out << "name,psnr,ssim,error\n";
  if (rows.empty())
    return out.str();
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int valid = 0;
  for (const auto& r : rows) {
    if (r.error.empty()) {
      out << csv_field(r.name) << "," << format_metric(r.psnr) << "," << format_metric(r.ssim) << ",\n";
      psnr_sum += r.psnr;
      ssim_sum += r.ssim;
      ++valid;
    } else {
      out << csv_field(r.name) << ",,," << csv_field(r.error) << "\n";
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << "mean," << format_metric(valid ? psnr_sum / valid : nan) << ","
      << format_metric(valid ? ssim_sum / valid : nan) << ",\n";
  return out.str();
}

std::vector<PathPair> read_pair_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open pair list " + path.string());
  const auto base = path.parent_path();
  std::vector<PathPair> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line[0] == '#')
      continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected output<TAB>reference");
    auto resolve = [&](std::filesystem::path p) { return p.is_absolute() ? p : base / p; };
    pairs.emplace_back(resolve(line.substr(0, tab)), resolve(line.substr(tab + 1)));
  }
  return pairs;
}

}  // namespace rbsr
