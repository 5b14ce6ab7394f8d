#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dirtensor {

/// Default upper bound on the number of entries any dense tensor may hold.
inline constexpr std::size_t kDefaultElementCap = 100'000'000;

/// Raised when a requested tensor would exceed the configured element cap.
class CapExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

using Shape = std::vector<std::size_t>;

/// Product of shape entries, throwing CapExceeded when it passes `cap`.
std::size_t checked_element_count(std::span<const std::size_t> shape,
                                  std::size_t cap = kDefaultElementCap);

/// Dense N-way array, row-major, order >= 1.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0,
                    std::size_t cap = kDefaultElementCap);
    Tensor(Shape shape, std::vector<double> data);

    /// All sides equal to `side`, `order` modes.
    static Tensor cube(std::size_t side, std::size_t order, double fill = 0.0,
                       std::size_t cap = kDefaultElementCap);
    static Tensor vector(std::vector<double> values);

    std::size_t order() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    const Shape& shape() const { return shape_; }
    std::size_t dim(std::size_t mode) const { return shape_.at(mode); }

    /// True if every mode has the same extent.
    bool is_cubical() const;

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    double& operator[](std::size_t flat) { return data_[flat]; }
    double operator[](std::size_t flat) const { return data_[flat]; }

    double at(std::span<const std::size_t> index) const { return data_[offset(index)]; }
    double& at(std::span<const std::size_t> index) { return data_[offset(index)]; }
    double at(std::initializer_list<std::size_t> index) const {
        return at(std::span<const std::size_t>(index.begin(), index.size()));
    }

    std::size_t offset(std::span<const std::size_t> index) const;
    /// Inverse of offset(): writes the multi-index of `flat` into `index`.
    void unravel(std::size_t flat, std::span<std::size_t> index) const;

    double sum() const;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double s);
    /// this += s * other
    Tensor& axpy(double s, const Tensor& other);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Max |a-b| / max(|b|, floor) over entries; shapes must agree.
double max_relative_error(const Tensor& a, const Tensor& b, double abs_floor = 1e-12);
double max_abs_difference(const Tensor& a, const Tensor& b);
/// Max |a-b| / max(rel*|b|, abs) over entries; <= 1 means every entry is within
/// the combined relative/absolute tolerance.
double max_tolerance_ratio(const Tensor& a, const Tensor& b, double rel = 1e-10, double abs = 1e-12);

/// Bijection on {0..N-1}; `map[i]` is tau(i).
class Permutation {
public:
    explicit Permutation(std::vector<std::size_t> map);
    static Permutation identity(std::size_t n);
    /// Build from a 1-based listing (tau(1), ..., tau(N)).
    static Permutation from_one_based(std::span<const int> one_based);

    std::size_t size() const { return map_.size(); }
    std::size_t operator()(std::size_t i) const { return map_[i]; }
    const std::vector<std::size_t>& map() const { return map_; }
    Permutation inverse() const;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<std::size_t> map_;
};

/// K probability vectors of length V stored row-major.
class TopicMatrix {
public:
    TopicMatrix() = default;
    /// Rows must be nonnegative and sum to one within 1e-12.
    explicit TopicMatrix(std::vector<std::vector<double>> rows);
    /// Skips the simplex check; for intermediate or test-only matrices.
    static TopicMatrix unchecked(std::size_t K, std::size_t V, std::vector<double> data);

    std::size_t K() const { return K_; }
    std::size_t V() const { return V_; }
    double operator()(std::size_t k, std::size_t v) const { return data_[k * V_ + v]; }
    double& operator()(std::size_t k, std::size_t v) { return data_[k * V_ + v]; }
    std::span<const double> row(std::size_t k) const { return {data_.data() + k * V_, V_}; }
    std::span<double> row(std::size_t k) { return {data_.data() + k * V_, V_}; }
    std::span<const double> data() const { return data_; }
    std::vector<std::vector<double>> rows() const;

    friend bool operator==(const TopicMatrix&, const TopicMatrix&) = default;

private:
    std::size_t K_ = 0;
    std::size_t V_ = 0;
    std::vector<double> data_;
};

/// diag_N(w): w[k] on the super-diagonal (k,...,k), zero elsewhere.
Tensor diag_tensor(std::span<const double> weights, std::size_t order,
                   std::size_t cap = kDefaultElementCap);

/// Result(k_1..k_N) = t(k_tau(1)..k_tau(N)).
Tensor transpose(const Tensor& t, const Permutation& perm);

/// Entry = product of part entries at the split multi-index.
Tensor outer_product(std::span<const Tensor> parts, std::size_t cap = kDefaultElementCap);
Tensor outer_product(std::initializer_list<Tensor> parts);

/// Q[Theta^{(x)N}] computed by N successive mode contractions.
Tensor weighted_outer(const Tensor& q, const TopicMatrix& theta,
                      std::size_t cap = kDefaultElementCap);

/// Contract one mode of `t` against `matrix` (rows indexed by the old mode).
/// The new mode extent is matrix.V().
Tensor mode_product(const Tensor& t, std::size_t mode, const TopicMatrix& matrix,
                    std::size_t cap = kDefaultElementCap);

/// q[x, ..., x]: full contraction of a cubical tensor against one vector.
double contract_repeated(const Tensor& q, std::span<const double> x);

/// True when t is invariant under every transposition of adjacent modes.
bool is_symmetric(const Tensor& t, double tol);

}  // namespace dirtensor
