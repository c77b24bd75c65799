#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "puflab/rng.hpp"

namespace puflab {

// Minimal feed-forward network: ReLU hidden layers, 2-unit softmax output,
// cross-entropy loss, adaptive-moment optimizer. Single-threaded and
// deterministic for a given seed; templated so the attack harness can run
// float while the finite-difference gradient check runs double.
template <typename Scalar>
class Mlp {
  public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Mlp(std::vector<int> sizes, std::uint64_t seed) : sizes_(std::move(sizes)) {
        if (sizes_.size() < 2) throw std::invalid_argument("mlp needs at least input and output layers");
        if (sizes_.back() != 2) throw std::invalid_argument("output layer must have 2 units");
        Rng rng(seed);
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const int fan_in = sizes_[l], fan_out = sizes_[l + 1];
            Matrix w(fan_in, fan_out);
            const Rng wr = rng.fork(l);
            const Scalar scale = std::sqrt(Scalar(2) / Scalar(fan_in));
            for (int i = 0; i < fan_in; ++i)
                for (int j = 0; j < fan_out; ++j)
                    w(i, j) = scale * static_cast<Scalar>(wr.normal(static_cast<std::uint64_t>(i) * fan_out + j));
            W_.push_back(std::move(w));
            b_.push_back(Vector::Zero(fan_out));
        }
    }

    int input_width() const { return sizes_.front(); }

    Matrix logits(const Matrix& x) const {
        Matrix a = x;
        for (std::size_t l = 0; l < W_.size(); ++l) {
            a = (a * W_[l]).rowwise() + b_[l].transpose();
            if (l + 1 < W_.size()) a = a.cwiseMax(Scalar(0));
        }
        return a;
    }

    std::vector<std::uint8_t> predict(const Matrix& x) const {
        const Matrix z = logits(x);
        std::vector<std::uint8_t> out(z.rows());
        for (Eigen::Index r = 0; r < z.rows(); ++r) out[r] = z(r, 1) > z(r, 0) ? 1 : 0;
        return out;
    }

    // mean cross-entropy over the batch; gradients accumulated into gw/gb
    Scalar loss_and_gradients(const Matrix& x, const std::vector<std::uint8_t>& y,
                              std::vector<Matrix>& gw, std::vector<Vector>& gb) const {
        const Eigen::Index batch = x.rows();
        std::vector<Matrix> acts; // post-activation per layer, acts[0] = input
        acts.reserve(W_.size() + 1);
        acts.push_back(x);
        for (std::size_t l = 0; l < W_.size(); ++l) {
            Matrix z = (acts.back() * W_[l]).rowwise() + b_[l].transpose();
            if (l + 1 < W_.size()) z = z.cwiseMax(Scalar(0));
            acts.push_back(std::move(z));
        }
        const Matrix& out = acts.back();
        // stable two-way softmax cross-entropy
        Scalar loss = 0;
        Matrix delta(batch, 2);
        for (Eigen::Index r = 0; r < batch; ++r) {
            const Scalar m = std::max(out(r, 0), out(r, 1));
            const Scalar e0 = std::exp(out(r, 0) - m), e1 = std::exp(out(r, 1) - m);
            const Scalar zsum = e0 + e1;
            const Scalar p0 = e0 / zsum, p1 = e1 / zsum;
            loss -= std::log(y[static_cast<std::size_t>(r)] ? p1 : p0);
            delta(r, 0) = (p0 - (y[static_cast<std::size_t>(r)] ? Scalar(0) : Scalar(1))) / Scalar(batch);
            delta(r, 1) = (p1 - (y[static_cast<std::size_t>(r)] ? Scalar(1) : Scalar(0))) / Scalar(batch);
        }
        loss /= Scalar(batch);

        gw.resize(W_.size());
        gb.resize(W_.size());
        Matrix grad = delta;
        for (std::size_t l = W_.size(); l-- > 0;) {
            gw[l] = acts[l].transpose() * grad;
            gb[l] = grad.colwise().sum().transpose();
            if (l > 0) {
                grad = grad * W_[l].transpose();
                grad = grad.array() * (acts[l].array() > Scalar(0)).template cast<Scalar>();
            }
        }
        return loss;
    }

    struct TrainConfig {
        Scalar learning_rate = Scalar(1e-3);
        int batch_size = 256;
        int max_epochs = 40;
        int plateau_epochs = 5;          // early stop when validation stalls this long
        double validation_fraction = 0.04;
        std::uint64_t seed = 1;
    };

    struct TrainResult {
        int epochs_run = 0;
        double best_validation_accuracy = 0;
        bool diverged = false;
    };

    TrainResult train(const Matrix& x, const std::vector<std::uint8_t>& y, const TrainConfig& cfg) {
        const Eigen::Index total = x.rows();
        const Eigen::Index n_val = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(
                                       static_cast<double>(total) * cfg.validation_fraction));
        const Eigen::Index n_train = total - n_val;
        if (n_train < 1) throw std::invalid_argument("not enough rows to train");

        std::vector<Matrix> mw(W_.size()), vw(W_.size());
        std::vector<Vector> mb(b_.size()), vb(b_.size());
        for (std::size_t l = 0; l < W_.size(); ++l) {
            mw[l] = Matrix::Zero(W_[l].rows(), W_[l].cols());
            vw[l] = mw[l];
            mb[l] = Vector::Zero(b_[l].size());
            vb[l] = mb[l];
        }
        const Scalar beta1 = Scalar(0.9), beta2 = Scalar(0.999), eps = Scalar(1e-8);
        long step = 0;

        std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
        for (Eigen::Index i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

        TrainResult result;
        std::vector<Matrix> best_w = W_;
        std::vector<Vector> best_b = b_;
        int stall = 0;
        const Rng shuffler(cfg.seed);

        std::vector<Matrix> gw;
        std::vector<Vector> gb;
        for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
            const Rng er = shuffler.fork(static_cast<std::uint64_t>(epoch));
            for (Eigen::Index i = n_train - 1; i > 0; --i) {
                const Eigen::Index j = static_cast<Eigen::Index>(er.bits(static_cast<std::uint64_t>(i)) %
                                                                 static_cast<std::uint64_t>(i + 1));
                std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
            }
            bool nan_seen = false;
            for (Eigen::Index start = 0; start < n_train; start += cfg.batch_size) {
                const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n_train - start);
                Matrix xb(bs, x.cols());
                std::vector<std::uint8_t> yb(static_cast<std::size_t>(bs));
                for (Eigen::Index r = 0; r < bs; ++r) {
                    const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
                    xb.row(r) = x.row(src);
                    yb[static_cast<std::size_t>(r)] = y[static_cast<std::size_t>(src)];
                }
                const Scalar loss = loss_and_gradients(xb, yb, gw, gb);
                if (!std::isfinite(static_cast<double>(loss))) {
                    nan_seen = true;
                    break;
                }
                ++step;
                const Scalar corr1 = Scalar(1) - std::pow(beta1, Scalar(step));
                const Scalar corr2 = Scalar(1) - std::pow(beta2, Scalar(step));
                for (std::size_t l = 0; l < W_.size(); ++l) {
                    mw[l] = beta1 * mw[l] + (Scalar(1) - beta1) * gw[l];
                    vw[l] = beta2 * vw[l] + (Scalar(1) - beta2) * gw[l].cwiseProduct(gw[l]);
                    W_[l] -= cfg.learning_rate *
                             (mw[l] / corr1).cwiseQuotient(((vw[l] / corr2).cwiseSqrt().array() + eps).matrix());
                    mb[l] = beta1 * mb[l] + (Scalar(1) - beta1) * gb[l];
                    vb[l] = beta2 * vb[l] + (Scalar(1) - beta2) * gb[l].cwiseProduct(gb[l]);
                    b_[l] -= cfg.learning_rate *
                             (mb[l] / corr1).cwiseQuotient(((vb[l] / corr2).cwiseSqrt().array() + eps).matrix());
                }
            }
            result.epochs_run = epoch + 1;
            if (nan_seen) {
                result.diverged = true;
                break;
            }
            // validation accuracy on the held-out tail
            const auto pred = predict(x.bottomRows(n_val));
            long correct = 0;
            for (Eigen::Index r = 0; r < n_val; ++r)
                correct += pred[static_cast<std::size_t>(r)] == y[static_cast<std::size_t>(n_train + r)];
            const double acc = static_cast<double>(correct) / static_cast<double>(n_val);
            if (acc > result.best_validation_accuracy + 1e-4) {
                result.best_validation_accuracy = acc;
                best_w = W_;
                best_b = b_;
                stall = 0;
            } else if (++stall >= cfg.plateau_epochs) {
                break;
            }
        }
        W_ = best_w;
        b_ = best_b;
        return result;
    }

    Vector flatten_params() const {
        Vector v(param_count());
        Eigen::Index at = 0;
        for (std::size_t l = 0; l < W_.size(); ++l) {
            for (Eigen::Index i = 0; i < W_[l].size(); ++i) v[at++] = W_[l].data()[i];
            for (Eigen::Index i = 0; i < b_[l].size(); ++i) v[at++] = b_[l][i];
        }
        return v;
    }

    void set_params(const Vector& v) {
        if (v.size() != param_count()) throw std::invalid_argument("wrong parameter count");
        Eigen::Index at = 0;
        for (std::size_t l = 0; l < W_.size(); ++l) {
            for (Eigen::Index i = 0; i < W_[l].size(); ++i) W_[l].data()[i] = v[at++];
            for (Eigen::Index i = 0; i < b_[l].size(); ++i) b_[l][i] = v[at++];
        }
    }

    Eigen::Index param_count() const {
        Eigen::Index c = 0;
        for (std::size_t l = 0; l < W_.size(); ++l) c += W_[l].size() + b_[l].size();
        return c;
    }

    // gradient of mean loss w.r.t. the flattened parameters (for gradcheck)
    Vector flat_gradient(const Matrix& x, const std::vector<std::uint8_t>& y) const {
        std::vector<Matrix> gw;
        std::vector<Vector> gb;
        loss_and_gradients(x, y, gw, gb);
        Vector v(param_count());
        Eigen::Index at = 0;
        for (std::size_t l = 0; l < gw.size(); ++l) {
            for (Eigen::Index i = 0; i < gw[l].size(); ++i) v[at++] = gw[l].data()[i];
            for (Eigen::Index i = 0; i < gb[l].size(); ++i) v[at++] = gb[l][i];
        }
        return v;
    }

    Scalar loss_only(const Matrix& x, const std::vector<std::uint8_t>& y) const {
        std::vector<Matrix> gw;
        std::vector<Vector> gb;
        return loss_and_gradients(x, y, gw, gb);
    }

  private:
    std::vector<int> sizes_;
    std::vector<Matrix> W_;
    std::vector<Vector> b_;
};

} // namespace puflab
