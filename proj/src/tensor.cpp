#include "dirtensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dirtensor {

std::size_t checked_element_count(std::span<const std::size_t> shape, std::size_t cap) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("tensor dimension must be positive");
        if (n > cap / d) {
            throw CapExceeded("tensor would exceed the element cap of " + std::to_string(cap) +
                              " entries");
        }
        n *= d;
    }
    if (n > cap) throw CapExceeded("tensor would exceed the element cap");
    return n;
}

Tensor::Tensor(Shape shape, double fill, std::size_t cap) : shape_(std::move(shape)) {
    if (shape_.empty()) throw std::invalid_argument("order-0 tensors are not supported");
    data_.assign(checked_element_count(shape_, cap), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) throw std::invalid_argument("order-0 tensors are not supported");
    if (checked_element_count(shape_, std::numeric_limits<std::size_t>::max()) != data_.size())
        throw std::invalid_argument("tensor data length does not match shape");
    for (double v : data_)
        if (!std::isfinite(v)) throw std::invalid_argument("tensor entries must be finite");
}

Tensor Tensor::cube(std::size_t side, std::size_t order, double fill, std::size_t cap) {
    return Tensor(Shape(order, side), fill, cap);
}

Tensor Tensor::vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

bool Tensor::is_cubical() const {
    return std::all_of(shape_.begin(), shape_.end(),
                       [&](std::size_t d) { return d == shape_.front(); });
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) throw std::invalid_argument("index order mismatch");
    std::size_t off = 0;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (index[i] >= shape_[i]) throw std::out_of_range("tensor index out of range");
        off = off * shape_[i] + index[i];
    }
    return off;
}

void Tensor::unravel(std::size_t flat, std::span<std::size_t> index) const {
    for (std::size_t i = shape_.size(); i-- > 0;) {
        index[i] = flat % shape_[i];
        flat /= shape_[i];
    }
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

Tensor& Tensor::operator+=(const Tensor& other) { return axpy(1.0, other); }
Tensor& Tensor::operator-=(const Tensor& other) { return axpy(-1.0, other); }

Tensor& Tensor::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Tensor& Tensor::axpy(double s, const Tensor& other) {
    if (other.shape_ != shape_) throw std::invalid_argument("tensor shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
    return *this;
}

double max_relative_error(const Tensor& a, const Tensor& b, double abs_floor) {
    if (a.shape() != b.shape()) throw std::invalid_argument("tensor shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max(std::abs(b[i]), abs_floor);
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

double max_tolerance_ratio(const Tensor& a, const Tensor& b, double rel, double abs) {
    if (a.shape() != b.shape()) throw std::invalid_argument("tensor shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(rel * std::abs(b[i]), abs));
    return worst;
}

double max_abs_difference(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("tensor shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// ---------------------------------------------------------------------------

Permutation::Permutation(std::vector<std::size_t> map) : map_(std::move(map)) {
    std::vector<bool> seen(map_.size(), false);
    for (std::size_t v : map_) {
        if (v >= map_.size() || seen[v]) throw std::invalid_argument("not a permutation");
        seen[v] = true;
    }
}

Permutation Permutation::identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    return Permutation(std::move(m));
}

Permutation Permutation::from_one_based(std::span<const int> one_based) {
    std::vector<std::size_t> m;
    m.reserve(one_based.size());
    for (int v : one_based) {
        if (v < 1) throw std::invalid_argument("not a permutation");
        m.push_back(static_cast<std::size_t>(v - 1));
    }
    return Permutation(std::move(m));
}

Permutation Permutation::inverse() const {
    std::vector<std::size_t> inv(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) inv[map_[i]] = i;
    return Permutation(std::move(inv));
}

// ---------------------------------------------------------------------------

TopicMatrix::TopicMatrix(std::vector<std::vector<double>> rows) {
    if (rows.empty() || rows.front().empty()) throw std::invalid_argument("empty topic matrix");
    K_ = rows.size();
    V_ = rows.front().size();
    data_.reserve(K_ * V_);
    for (const auto& r : rows) {
        if (r.size() != V_) throw std::invalid_argument("ragged topic matrix");
        double s = 0.0;
        for (double v : r) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("topic entries must be nonnegative");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("topic row must sum to 1");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

TopicMatrix TopicMatrix::unchecked(std::size_t K, std::size_t V, std::vector<double> data) {
    if (data.size() != K * V) throw std::invalid_argument("topic matrix data size mismatch");
    TopicMatrix m;
    m.K_ = K;
    m.V_ = V;
    m.data_ = std::move(data);
    return m;
}

std::vector<std::vector<double>> TopicMatrix::rows() const {
    std::vector<std::vector<double>> out(K_);
    for (std::size_t k = 0; k < K_; ++k) out[k].assign(row(k).begin(), row(k).end());
    return out;
}

// ---------------------------------------------------------------------------

Tensor diag_tensor(std::span<const double> weights, std::size_t order, std::size_t cap) {
    if (order == 0) throw std::invalid_argument("diag_tensor: order must be >= 1");
    if (weights.empty()) throw std::invalid_argument("diag_tensor: empty weights");
    const std::size_t K = weights.size();
    Tensor t = Tensor::cube(K, order, 0.0, cap);
    // Stride between consecutive diagonal entries: 1 + K + K^2 + ... + K^{N-1}.
    std::size_t step = 0;
    for (std::size_t i = 0, p = 1; i < order; ++i, p *= K) step += p;
    for (std::size_t k = 0; k < K; ++k) t[k * step] = weights[k];
    return t;
}

Tensor transpose(const Tensor& t, const Permutation& perm) {
    const std::size_t N = t.order();
    if (perm.size() != N) throw std::invalid_argument("transpose: permutation length mismatch");
    // Input mode i is read with output index k_{tau(i)}, so out dim tau(i) = in dim i.
    Shape out_shape(N);
    for (std::size_t i = 0; i < N; ++i) out_shape[perm(i)] = t.dim(i);

    // Stride of output mode j inside the input buffer.
    std::vector<std::size_t> in_stride(N);
    for (std::size_t i = N, s = 1; i-- > 0;) {
        in_stride[i] = s;
        s *= t.dim(i);
    }
    std::vector<std::size_t> stride_for_out(N);
    for (std::size_t i = 0; i < N; ++i) stride_for_out[perm(i)] = in_stride[i];

    Tensor out(out_shape, 0.0, std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> idx(N, 0);
    std::size_t src = 0;
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        out[flat] = t[src];
        // odometer increment over the output multi-index
        for (std::size_t j = N; j-- > 0;) {
            if (++idx[j] < out_shape[j]) {
                src += stride_for_out[j];
                break;
            }
            src -= stride_for_out[j] * (out_shape[j] - 1);
            idx[j] = 0;
        }
    }
    return out;
}

Tensor outer_product(std::span<const Tensor> parts, std::size_t cap) {
    if (parts.empty()) throw std::invalid_argument("outer_product: no parts");
    Shape shape;
    for (const Tensor& p : parts) {
        if (p.order() == 0) throw std::invalid_argument("outer_product: order-0 part");
        shape.insert(shape.end(), p.shape().begin(), p.shape().end());
    }
    checked_element_count(shape, cap);
    std::vector<double> acc(parts.front().data().begin(), parts.front().data().end());
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto rhs = parts[i].data();
        std::vector<double> next;
        next.reserve(acc.size() * rhs.size());
        for (double a : acc)
            for (double b : rhs) next.push_back(a * b);
        acc = std::move(next);
    }
    return Tensor(std::move(shape), std::move(acc));
}

Tensor outer_product(std::initializer_list<Tensor> parts) {
    return outer_product(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor mode_product(const Tensor& t, std::size_t mode, const TopicMatrix& matrix,
                    std::size_t cap) {
    if (mode >= t.order()) throw std::invalid_argument("mode_product: bad mode");
    const std::size_t K = t.dim(mode);
    if (matrix.K() != K) throw std::invalid_argument("mode_product: dimension mismatch");
    const std::size_t V = matrix.V();
    std::size_t left = 1, right = 1;
    for (std::size_t i = 0; i < mode; ++i) left *= t.dim(i);
    for (std::size_t i = mode + 1; i < t.order(); ++i) right *= t.dim(i);

    Shape shape = t.shape();
    shape[mode] = V;
    Tensor out(shape, 0.0, cap);
    const auto in = t.data();
    auto dst = out.data();
    for (std::size_t l = 0; l < left; ++l) {
        for (std::size_t k = 0; k < K; ++k) {
            const double* src = in.data() + (l * K + k) * right;
            for (std::size_t v = 0; v < V; ++v) {
                const double w = matrix(k, v);
                if (w == 0.0) continue;
                double* o = dst.data() + (l * V + v) * right;
                for (std::size_t r = 0; r < right; ++r) o[r] += w * src[r];
            }
        }
    }
    return out;
}

Tensor weighted_outer(const Tensor& q, const TopicMatrix& theta, std::size_t cap) {
    if (!q.is_cubical() || q.dim(0) != theta.K())
        throw std::invalid_argument("weighted_outer: tensor side must equal theta.K");
    Shape final_shape(q.order(), theta.V());
    checked_element_count(final_shape, cap);
    Tensor cur = q;
    for (std::size_t mode = 0; mode < q.order(); ++mode)
        cur = mode_product(cur, mode, theta, std::numeric_limits<std::size_t>::max());
    return cur;
}

double contract_repeated(const Tensor& q, std::span<const double> x) {
    if (!q.is_cubical() || q.dim(0) != x.size())
        throw std::invalid_argument("contract_repeated: dimension mismatch");
    const std::size_t K = x.size();
    std::vector<double> cur(q.data().begin(), q.data().end());
    for (std::size_t mode = 0; mode < q.order(); ++mode) {
        std::vector<double> next(cur.size() / K, 0.0);
        for (std::size_t i = 0; i < next.size(); ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) s += cur[i * K + k] * x[k];
            next[i] = s;
        }
        cur = std::move(next);
    }
    return cur.front();
}

bool is_symmetric(const Tensor& t, double tol) {
    if (!t.is_cubical()) return false;
    const std::size_t N = t.order();
    for (std::size_t i = 0; i + 1 < N; ++i) {
        std::vector<std::size_t> m(N);
        std::iota(m.begin(), m.end(), std::size_t{0});
        std::swap(m[i], m[i + 1]);
        if (max_abs_difference(transpose(t, Permutation(m)), t) > tol) return false;
    }
    return true;
}

}  // namespace dirtensor
