#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cxgnn/error.hpp"

namespace cxgnn {

struct MlpConfig {
    std::size_t input_dim = 2;
    std::size_t hidden_layers = 2;
    std::size_t hidden_width = 64;

    void validate() const {
        if (input_dim < 1 || hidden_layers < 1 || hidden_width < 1)
            throw InputError("MLP dimensions must all be >= 1");
    }
    bool operator==(const MlpConfig&) const = default;
};

struct DenseLayer {
    Eigen::MatrixXd w; // out x in
    Eigen::VectorXd b; // out

    std::size_t size() const { return static_cast<std::size_t>(w.size() + b.size()); }
    bool operator==(const DenseLayer& o) const { return w == o.w && b == o.b; }
};

using MlpGrad = std::vector<DenseLayer>;

struct MlpCache {
    std::vector<Eigen::MatrixXd> inputs; // input of each layer
    std::vector<Eigen::MatrixXd> pre;    // pre-activation of each hidden layer
};

// ReLU hidden layers, single linear output. Columns of x are samples.
class Mlp {
public:
    explicit Mlp(const MlpConfig& cfg = {}) {
        cfg.validate();
        std::size_t in = cfg.input_dim;
        for (std::size_t l = 0; l < cfg.hidden_layers; ++l) {
            layers_.push_back(zero_layer(cfg.hidden_width, in));
            in = cfg.hidden_width;
        }
        layers_.push_back(zero_layer(1, in));
    }

    // Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    void init(std::mt19937_64& rng) {
        for (auto& L : layers_) {
            const double s = 1.0 / std::sqrt(static_cast<double>(L.w.cols()));
            std::uniform_real_distribution<double> U(-s, s);
            for (Eigen::Index i = 0; i < L.w.size(); ++i) L.w.data()[i] = U(rng);
            L.b.setZero();
        }
    }

    Eigen::RowVectorXd forward(const Eigen::MatrixXd& x, MlpCache* cache = nullptr) const {
        if (cache) {
            cache->inputs.clear();
            cache->pre.clear();
        }
        Eigen::MatrixXd h = x;
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            Eigen::MatrixXd z = (layers_[l].w * h).colwise() + layers_[l].b;
            if (cache) {
                cache->inputs.push_back(std::move(h));
                cache->pre.push_back(z);
            }
            h = z.cwiseMax(0.0);
        }
        const auto& out = layers_.back();
        Eigen::RowVectorXd y = (out.w * h).array() + out.b(0);
        if (cache) cache->inputs.push_back(std::move(h));
        return y;
    }

    // Same map at another scalar precision; optionally records hidden ReLU signs.
    template <class T>
    Eigen::Matrix<T, 1, Eigen::Dynamic> forward_as(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& x,
                                                   std::vector<bool>* signs = nullptr) const {
        using M = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
        M h = x;
        for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
            M z = (layers_[l].w.template cast<T>() * h).colwise() + layers_[l].b.template cast<T>();
            if (signs)
                for (Eigen::Index i = 0; i < z.size(); ++i) signs->push_back(z.data()[i] > T(0));
            h = z.cwiseMax(T(0));
        }
        const auto& out = layers_.back();
        return ((out.w.template cast<T>() * h).array() + static_cast<T>(out.b(0))).matrix();
    }

    double forward(double x0, double x1) const {
        Eigen::MatrixXd x(2, 1);
        x << x0, x1;
        return forward(x)(0);
    }

    // Accumulates d(sum_s dout_s * y_s)/dtheta into grad.
    void backward(const MlpCache& cache, const Eigen::RowVectorXd& dout, MlpGrad& grad) const {
        Eigen::MatrixXd g = dout;
        for (std::size_t l = layers_.size(); l-- > 0;) {
            if (l + 1 < layers_.size()) g = g.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
            grad[l].w.noalias() += g * cache.inputs[l].transpose();
            grad[l].b += g.rowwise().sum();
            if (l > 0) g = layers_[l].w.transpose() * g;
        }
    }

    MlpGrad zero_grad() const {
        MlpGrad g;
        for (const auto& L : layers_) g.push_back(zero_layer(L.w.rows(), L.w.cols()));
        return g;
    }

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (const auto& L : layers_) n += L.size();
        return n;
    }

    bool operator==(const Mlp&) const = default;

private:
    static DenseLayer zero_layer(Eigen::Index out, Eigen::Index in) {
        return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
    }

    std::vector<DenseLayer> layers_;
};

template <std::floating_point T>
T sigmoid(T z) {
    return z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

inline Eigen::RowVectorXd sigmoid(const Eigen::RowVectorXd& z) {
    return z.unaryExpr([](double t) { return sigmoid<double>(t); });
}

// log(sigmoid(z)) without overflow
inline double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

} // namespace cxgnn
