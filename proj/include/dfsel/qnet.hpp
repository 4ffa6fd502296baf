#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dfsel/dataset.hpp"
#include "dfsel/features.hpp"

namespace dfsel {

// One-hidden-layer Q-value approximator: rectifier hidden units, linear
// outputs. The production shape 5 -> 1024 -> 3 holds exactly 9,219 parameters.
struct QNetwork {
    int in_dim = 0;
    int hidden_dim = 0;
    int out_dim = 0;
    std::vector<double> w1;  // hidden_dim x in_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // out_dim x hidden_dim, row-major
    std::vector<double> b2;  // out_dim

    std::int64_t param_count() const {
        return static_cast<std::int64_t>(w1.size() + b1.size() + w2.size() + b2.size());
    }
};

struct DqnHyper {
    double epsilon_start = 1.0;
    double epsilon_decay = 0.995;  // multiplicative, per episode
    double epsilon_min = 0.05;
    std::size_t replay_capacity = 10000;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double reward_weight = 0.1;  // utilization term weight
    std::int64_t episodes = 20000;
    int hidden_dim = 1024;
    std::uint64_t seed = 0;

    void validate() const;
};

// Weights uniform in +/- 1/sqrt(fan-in), biases zero, deterministic per seed.
QNetwork init_network(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed);
QNetwork init_network(std::uint64_t seed);  // production shape 5 -> 1024 -> 3

std::vector<double> forward(const QNetwork& net, std::span<const double> state);

// epsilon after `episode` completed episodes (closed form with floor).
double epsilon_at(const DqnHyper& hyper, std::int64_t episode);

// r = min(latencies)/latency[action] + lambda * utilization[action]; an
// all-zero latency row rewards 1 + lambda * utilization.
double reward(const DatasetRow& row, Dataflow action, double lambda);

// Every decision here is terminal (one choice per block pair), so the TD
// target is the immediate reward and there is no bootstrap term.
struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
};

// Fixed-capacity ring buffer; oldest transitions are evicted first.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return data_[i]; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

// One SGD step on the summed squared TD error over the batch; returns the
// pre-step loss.
double sgd_step(QNetwork& net, std::span<const Transition> batch, double learning_rate);

// argmax Q with ties resolved to the lower action code.
Dataflow predict_action(const QNetwork& net, std::span<const double> state);

// Max relative error between analytic TD-loss gradients and central finite
// differences (step 1e-5 by default) over every parameter.
double gradient_check(const QNetwork& net, std::span<const double> state, int action,
                      double target, double fd_step = 1e-5);

// Trained selector: the network plus the scaler/feature subset that define
// its state encoding.
struct QModel {
    QNetwork net;
    Scaler scaler;
    std::vector<int> feature_subset{feature::kTopFive.begin(), feature::kTopFive.end()};
    DqnHyper hyper;

    std::vector<double> encode(const FeatureVector& raw) const;
    Dataflow predict_raw(const FeatureVector& raw) const;
};

// Offline epsilon-greedy training over dataset rows with experience replay.
// Fully deterministic for a given (dataset, hyper) including the seed.
QModel train_dqn(const Dataset& train, const DqnHyper& hyper);

// Text header (dims, hyperparameters, seed, scaler) followed by the raw
// little-endian 64-bit float parameter block in layer order.
void save_qmodel(const QModel& model, const std::string& path);
QModel load_qmodel(const std::string& path);

}  // namespace dfsel
