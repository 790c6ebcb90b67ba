#include "rbsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace rbsr {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

namespace {

void record(GradCheckReport& r, double analytic, double numeric, const std::string& where) {
  const double e = relative_error(analytic, numeric);
  ++r.coordinates;
  if (e >= r.max_rel_error) {
    r.max_rel_error = e;
    r.worst = where + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
  }
}

std::vector<bool> relu_pattern(const Model<double>& model, const ForwardTrace<double>& trace) {
  std::vector<bool> bits;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (model.layers[i].kind != LayerKind::Relu)
      continue;
    const auto& in = i == 0 ? trace.input : trace.outputs[i - 1];
    for (std::size_t k = 0; k < in.size(); ++k) bits.push_back(in[k] > 0);
  }
  return bits;
}

std::vector<bool> signature(const Model<double>& model, const ForwardTrace<double>& trace, const KinkProbe& after) {
  auto bits = relu_pattern(model, trace);
  if (after) {
    const auto more = after(trace.outputs.back());
    bits.insert(bits.end(), more.begin(), more.end());
  }
  return bits;
}

}  // namespace

std::vector<bool> relu_signature(const Model<double>& model, const Tensor4<double>& x, int stop) {
  ForwardTrace<double> trace;
  model.forward(x, &trace, stop);
  return relu_pattern(model, trace);
}

GradCheckReport finite_diff_check(Model<double>& model, const OutputLoss& loss, const Tensor4<double>& input,
                                  double eps, int samples, std::uint64_t seed, const KinkProbe& after) {
  model.zero_grad();
  ForwardTrace<double> trace;
  const auto out = model.forward(input, &trace);
  const auto dout = loss(out).second;
  const auto dx = model.backward(trace, dout);
  const auto pattern = signature(model, trace, after);
  Tensor4<double> x = input;
  const std::size_t n_params = model.params.size();

  // Tensor id n_params denotes the input.
  auto slot = [&](std::size_t t, std::size_t k) -> double& { return t < n_params ? model.params[t].value[k] : x[k]; };
  auto check = [&](std::size_t t, std::size_t k, GradCheckReport& report) {
    double& v = slot(t, k);
    const double orig = v;
    ForwardTrace<double> tu, td;
    v = orig + eps;
    const double up = loss(model.forward(x, &tu)).first;
    v = orig - eps;
    const double down = loss(model.forward(x, &td)).first;
    v = orig;
    if (signature(model, tu, after) != pattern || signature(model, td, after) != pattern) {
      ++report.skipped;
      return false;
    }
    const double analytic = t < n_params ? model.params[t].grad[k] : dx[k];
    const std::string where = t < n_params ? model.params[t].name : std::string("input");
    record(report, analytic, (up - down) / (2 * eps), where + "[" + std::to_string(k) + "]");
    return true;
  };

  std::mt19937_64 rng(seed);
  std::size_t total = input.size();
  for (const auto& p : model.params) total += p.value.size();
  const int max_draws = 50 * std::max(samples, int(n_params) + 1);
  GradCheckReport report;
  int draws = 0;
  for (std::size_t t = 0; t < n_params; ++t)
    while (draws++ < max_draws && !check(t, rng() % model.params[t].value.size(), report)) {
    }
  while (report.coordinates < samples && draws++ < max_draws) {
    std::size_t k = rng() % total;
    std::size_t t = 0;
    for (; t < n_params; ++t) {
      if (k < model.params[t].value.size())
        break;
      k -= model.params[t].value.size();
    }
    check(t, k, report);
  }
  return report;
}

GradCheckReport finite_diff_check(const TensorFunction& f, const Tensor4<double>& x0, double eps, int samples,
                                  std::uint64_t seed, const KinkProbe& probe) {
  const auto grad = f(x0).second;
  const auto pattern = probe ? probe(x0) : std::vector<bool>();
  Tensor4<double> x = x0;
  std::mt19937_64 rng(seed);
  GradCheckReport report;
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t s = 0; s < idx.size() && report.coordinates < samples; ++s) {
    const std::size_t k = idx[s];
    const double orig = x[k];
    x[k] = orig + eps;
    const double up = f(x).first;
    const bool kink_up = probe && probe(x) != pattern;
    x[k] = orig - eps;
    const double down = f(x).first;
    const bool kink_down = probe && probe(x) != pattern;
    x[k] = orig;
    if (kink_up || kink_down) {
      ++report.skipped;
      continue;
    }
    record(report, grad[k], (up - down) / (2 * eps), "x[" + std::to_string(k) + "]");
  }
  return report;
}

}  // namespace rbsr
