#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fedssta {

// Dense row-major tensor of doubles. Shape is explicit; data.size() must
// equal the shape product at all times.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor row(std::initializer_list<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i, std::size_t j);
  double at(std::size_t i, std::size_t j) const;

  bool all_finite() const;
};

// out = a (m x k) * b (k x n), row-major buffers. Caller owns sizing.
void matmul_buf(const double* a, const double* b, double* out,
                std::size_t m, std::size_t k, std::size_t n);

// out += a * b, same layout as matmul_buf.
void matmul_acc(const double* a, const double* b, double* out,
                std::size_t m, std::size_t k, std::size_t n);

// out = a^T (k x m becomes m x k) * b (k x n): out is m x n.
void matmul_at_b(const double* a, const double* b, double* out,
                 std::size_t m, std::size_t k, std::size_t n);

// out += a (m x k) * b^T (n x k): out is m x n.
void matmul_a_bt_acc(const double* a, const double* b, double* out,
                     std::size_t m, std::size_t k, std::size_t n);

Tensor matmul(const Tensor& a, const Tensor& b);

// Numerically stable softmax with temperature: divide by tau first, subtract
// the max, exponentiate, normalize. tau must be > 0.
void softmax_buf(const double* in, double* out, std::size_t n, double tau);
std::vector<double> softmax(std::span<const double> v, double tau = 1.0);
Tensor softmax(const Tensor& v, double tau);

// Cosine similarity clamped to [-1, 1]; either vector with norm < 1e-12
// yields 0 by convention.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(const Tensor& a, const Tensor& b);

// Central-difference gradient of a scalar function, the reference oracle for
// every analytic gradient in this codebase.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double h = 1e-5);
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double h = 1e-5);

}  // namespace fedssta
