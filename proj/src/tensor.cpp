#include "fedssta/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedssta {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != data.size()) {
    throw std::invalid_argument("tensor: shape " + shape_str(shape) +
                                " does not match data size " +
                                std::to_string(data.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::invalid_argument("tensor: rows() needs rank 2, got " + shape_str(shape));
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::invalid_argument("tensor: cols() needs rank 2, got " + shape_str(shape));
  return shape[1];
}

double& Tensor::at(std::size_t i, std::size_t j) {
  return data[i * cols() + j];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  return data[i * cols() + j];
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

void matmul_buf(const double* a, const double* b, double* out,
                std::size_t m, std::size_t k, std::size_t n) {
  std::fill(out, out + m * n, 0.0);
  matmul_acc(a, b, out, m, k, n);
}

void matmul_acc(const double* a, const double* b, double* out,
                std::size_t m, std::size_t k, std::size_t n) {
  // i-k-j order keeps the inner loop contiguous in b and out.
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* oi = out + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      double av = ai[kk];
      if (av == 0.0) continue;
      const double* bk = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) oi[j] += av * bk[j];
    }
  }
}

void matmul_at_b(const double* a, const double* b, double* out,
                 std::size_t m, std::size_t k, std::size_t n) {
  std::fill(out, out + m * n, 0.0);
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* ak = a + kk * m;
    const double* bk = b + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      double av = ak[i];
      if (av == 0.0) continue;
      double* oi = out + i * n;
      for (std::size_t j = 0; j < n; ++j) oi[j] += av * bk[j];
    }
  }
}

void matmul_a_bt_acc(const double* a, const double* b, double* out,
                     std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* oi = out + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = b + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
      oi[j] += acc;
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw std::invalid_argument("matmul: expected rank-2 tensors, got " +
                                shape_str(a.shape) + " and " + shape_str(b.shape));
  }
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ, " +
                                shape_str(a.shape) + " vs " + shape_str(b.shape));
  }
  Tensor out = Tensor::zeros({a.rows(), b.cols()});
  matmul_buf(a.data.data(), b.data.data(), out.data.data(),
             a.rows(), a.cols(), b.cols());
  return out;
}

void softmax_buf(const double* in, double* out, std::size_t n, double tau) {
  if (tau <= 0.0) {
    throw std::invalid_argument("softmax: temperature must be > 0, got " +
                                std::to_string(tau));
  }
  if (n == 0) throw std::invalid_argument("softmax: empty input");
  double mx = in[0] / tau;
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i] / tau);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] / tau - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
}

std::vector<double> softmax(std::span<const double> v, double tau) {
  std::vector<double> out(v.size());
  softmax_buf(v.data(), out.data(), v.size(), tau);
  return out;
}

Tensor softmax(const Tensor& v, double tau) {
  Tensor out = v;
  softmax_buf(v.data.data(), out.data.data(), v.size(), tau);
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine: length mismatch, " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  // scale by the max magnitudes so the squared sums cannot overflow
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma = std::max(ma, std::fabs(a[i]));
    mb = std::max(mb, std::fabs(b[i]));
  }
  if (ma == 0.0 || mb == 0.0) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double x = a[i] / ma, y = b[i] / mb;
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (ma * na < 1e-12 || mb * nb < 1e-12) return 0.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

double cosine(const Tensor& a, const Tensor& b) {
  return cosine(std::span<const double>(a.data), std::span<const double>(b.data));
}

std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  std::vector<double> grad(x.size());
  std::vector<double> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double orig = xp[i];
    xp[i] = orig + h;
    double fp = f(xp);
    xp[i] = orig - h;
    double fm = f(xp);
    xp[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw std::runtime_error("finite_diff_grad: non-finite value at coordinate " +
                               std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h) {
  Tensor xt = x;
  auto wrapped = [&](const std::vector<double>& v) {
    xt.data = v;
    return f(xt);
  };
  std::vector<double> g = finite_diff_grad(wrapped, x.data, h);
  return Tensor(x.shape, std::move(g));
}

}  // namespace fedssta
