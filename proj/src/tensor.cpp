#include "signdiff/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace signdiff {

Tensor::Tensor(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
    int64_t numel = 1;
    for (int d : shape) {
        if (d < 0) {
            throw std::invalid_argument("negative tensor dimension");
        }
        numel *= d;
    }
    data.assign(static_cast<size_t>(numel), 0.0);
}

void Tensor::fill_uniform(CounterRng& rng, double scale) {
    for (double& v : data) {
        v = rng.next_range(-scale, scale);
    }
}

void Tensor::zero() { std::fill(data.begin(), data.end(), 0.0); }

std::vector<double>& GradTape::grad_for(const Tensor& param) {
    auto [it, inserted] = grads.try_emplace(param.name);
    if (inserted) {
        it->second.assign(param.data.size(), 0.0);
    }
    return it->second;
}

const std::vector<double>* GradTape::find(const std::string& name) const {
    auto it = grads.find(name);
    return it == grads.end() ? nullptr : &it->second;
}

void GradTape::accumulate(const GradTape& other) {
    for (const auto& [name, buf] : other.grads) {
        auto [it, inserted] = grads.try_emplace(name, buf.size(), 0.0);
        if (it->second.size() != buf.size()) {
            throw std::invalid_argument("gradient shape mismatch for " + name);
        }
        for (size_t i = 0; i < buf.size(); ++i) {
            it->second[i] += buf[i];
        }
    }
}

void GradTape::scale(double factor) {
    for (auto& [name, buf] : grads) {
        for (double& v : buf) {
            v *= factor;
        }
    }
}

double GradTape::squared_norm() const {
    double acc = 0.0;
    for (const auto& [name, buf] : grads) {
        for (double v : buf) {
            acc += v * v;
        }
    }
    return acc;
}

bool GradTape::all_zero(double tol) const {
    for (const auto& [name, buf] : grads) {
        for (double v : buf) {
            if (std::abs(v) > tol) {
                return false;
            }
        }
    }
    return true;
}

}  // namespace signdiff
