#include "dfsel/qnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace dfsel {

static_assert(std::endian::native == std::endian::little,
              "parameter blocks are written little-endian");

void DqnHyper::validate() const {
    if (!(epsilon_decay > 0.0) || !(epsilon_decay < 1.0))
        throw std::invalid_argument("epsilon_decay must be in (0, 1)");
    if (epsilon_min < 0.0 || epsilon_start < epsilon_min)
        throw std::invalid_argument("need epsilon_start >= epsilon_min >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (replay_capacity < static_cast<std::size_t>(batch_size))
        throw std::invalid_argument("replay_capacity must be >= batch_size");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
    if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
}

namespace {

QNetwork init_from_rng(int in_dim, int hidden_dim, int out_dim, std::mt19937_64& rng) {
    QNetwork n;
    n.in_dim = in_dim;
    n.hidden_dim = hidden_dim;
    n.out_dim = out_dim;
    n.w1.resize(static_cast<size_t>(hidden_dim) * in_dim);
    n.b1.assign(hidden_dim, 0.0);
    n.w2.resize(static_cast<size_t>(out_dim) * hidden_dim);
    n.b2.assign(out_dim, 0.0);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    std::uniform_real_distribution<double> d1(-bound1, bound1);
    std::uniform_real_distribution<double> d2(-bound2, bound2);
    for (double& v : n.w1) v = d1(rng);
    for (double& v : n.w2) v = d2(rng);
    return n;
}

}  // namespace

QNetwork init_network(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed) {
    if (in_dim < 1 || hidden_dim < 1 || out_dim < 1)
        throw std::invalid_argument("network dimensions must be positive");
    std::mt19937_64 rng(seed);
    return init_from_rng(in_dim, hidden_dim, out_dim, rng);
}

QNetwork init_network(std::uint64_t seed) { return init_network(5, 1024, 3, seed); }

std::vector<double> forward(const QNetwork& net, std::span<const double> state) {
    if (static_cast<int>(state.size()) != net.in_dim)
        throw std::invalid_argument("forward: state size != in_dim");
    for (double v : state)
        if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite state");

    std::vector<double> q(net.b2);
    std::vector<double> h(net.hidden_dim);
    for (int j = 0; j < net.hidden_dim; ++j) {
        double z = net.b1[j];
        const double* w = &net.w1[static_cast<size_t>(j) * net.in_dim];
        for (int i = 0; i < net.in_dim; ++i) z += w[i] * state[i];
        h[j] = z > 0.0 ? z : 0.0;
    }
    for (int a = 0; a < net.out_dim; ++a) {
        const double* w = &net.w2[static_cast<size_t>(a) * net.hidden_dim];
        double acc = 0.0;
        for (int j = 0; j < net.hidden_dim; ++j) acc += w[j] * h[j];
        q[a] += acc;
    }
    return q;
}

double epsilon_at(const DqnHyper& hyper, std::int64_t episode) {
    return std::max(hyper.epsilon_min,
                    hyper.epsilon_start * std::pow(hyper.epsilon_decay,
                                                   static_cast<double>(episode)));
}

double reward(const DatasetRow& row, Dataflow action, double lambda) {
    const int a = static_cast<int>(action);
    const std::uint64_t best = *std::min_element(row.latency.begin(), row.latency.end());
    const double ratio = row.latency[a] == 0
                             ? 1.0
                             : static_cast<double>(best) / static_cast<double>(row.latency[a]);
    return ratio + lambda * row.utilization[a];
}

namespace {

struct Gradients {
    std::vector<double> w1, b1, w2, b2;

    explicit Gradients(const QNetwork& n)
        : w1(n.w1.size(), 0.0), b1(n.b1.size(), 0.0), w2(n.w2.size(), 0.0), b2(n.b2.size(), 0.0) {}
};

// accumulates d/dtheta of (q(s, action) - target)^2 into g; returns the loss
double accumulate_td_gradients(const QNetwork& net, std::span<const double> state, int action,
                               double target, Gradients& g) {
    std::vector<double> z(net.hidden_dim), h(net.hidden_dim);
    for (int j = 0; j < net.hidden_dim; ++j) {
        double acc = net.b1[j];
        const double* w = &net.w1[static_cast<size_t>(j) * net.in_dim];
        for (int i = 0; i < net.in_dim; ++i) acc += w[i] * state[i];
        z[j] = acc;
        h[j] = acc > 0.0 ? acc : 0.0;
    }
    double q = net.b2[action];
    {
        const double* w = &net.w2[static_cast<size_t>(action) * net.hidden_dim];
        for (int j = 0; j < net.hidden_dim; ++j) q += w[j] * h[j];
    }
    const double err = q - target;
    const double dq = 2.0 * err;

    g.b2[action] += dq;
    double* gw2 = &g.w2[static_cast<size_t>(action) * net.hidden_dim];
    const double* w2 = &net.w2[static_cast<size_t>(action) * net.hidden_dim];
    for (int j = 0; j < net.hidden_dim; ++j) {
        gw2[j] += dq * h[j];
        if (z[j] > 0.0) {
            const double dz = dq * w2[j];
            g.b1[j] += dz;
            double* gw1 = &g.w1[static_cast<size_t>(j) * net.in_dim];
            for (int i = 0; i < net.in_dim; ++i) gw1[i] += dz * state[i];
        }
    }
    return err * err;
}

void apply(QNetwork& net, const Gradients& g, double lr) {
    for (size_t i = 0; i < net.w1.size(); ++i) net.w1[i] -= lr * g.w1[i];
    for (size_t i = 0; i < net.b1.size(); ++i) net.b1[i] -= lr * g.b1[i];
    for (size_t i = 0; i < net.w2.size(); ++i) net.w2[i] -= lr * g.w2[i];
    for (size_t i = 0; i < net.b2.size(); ++i) net.b2[i] -= lr * g.b2[i];
}

}  // namespace

double sgd_step(QNetwork& net, std::span<const Transition> batch, double learning_rate) {
    Gradients g(net);
    double loss = 0.0;
    for (const Transition& t : batch)
        loss += accumulate_td_gradients(net, t.state, t.action, t.reward, g);
    apply(net, g, learning_rate);
    return loss;
}

Dataflow predict_action(const QNetwork& net, std::span<const double> state) {
    const std::vector<double> q = forward(net, state);
    int best = 0;
    for (int a = 1; a < net.out_dim; ++a)
        if (q[a] > q[best]) best = a;
    return static_cast<Dataflow>(best);
}

double gradient_check(const QNetwork& net, std::span<const double> state, int action,
                      double target, double fd_step) {
    Gradients g(net);
    accumulate_td_gradients(net, state, action, target, g);

    QNetwork probe = net;
    auto loss_of = [&](const QNetwork& n) {
        const std::vector<double> q = forward(n, state);
        const double err = q[action] - target;
        return err * err;
    };

    double max_rel = 0.0;
    auto check_block = [&](std::vector<double>& params, const std::vector<double>& analytic) {
        for (size_t i = 0; i < params.size(); ++i) {
            const double saved = params[i];
            params[i] = saved + fd_step;
            const double up = loss_of(probe);
            params[i] = saved - fd_step;
            const double down = loss_of(probe);
            params[i] = saved;
            const double numeric = (up - down) / (2.0 * fd_step);
            const double denom = std::max({1e-8, std::abs(numeric), std::abs(analytic[i])});
            max_rel = std::max(max_rel, std::abs(numeric - analytic[i]) / denom);
        }
    };
    check_block(probe.w1, g.w1);
    check_block(probe.b1, g.b1);
    check_block(probe.w2, g.w2);
    check_block(probe.b2, g.b2);
    return max_rel;
}

std::vector<double> QModel::encode(const FeatureVector& raw) const {
    const FeatureVector scaled = scaler.apply(raw);
    std::vector<double> state(feature_subset.size());
    for (size_t i = 0; i < feature_subset.size(); ++i) state[i] = scaled[feature_subset[i]];
    return state;
}

Dataflow QModel::predict_raw(const FeatureVector& raw) const {
    return predict_action(net, encode(raw));
}

QModel train_dqn(const Dataset& train, const DqnHyper& hyper) {
    hyper.validate();
    if (train.rows.empty()) throw std::invalid_argument("train_dqn: empty training set");
    if (!train.has_scaler) throw std::invalid_argument("train_dqn: dataset has no scaler");

    QModel model;
    model.scaler = train.scaler;
    model.hyper = hyper;

    // pre-encode every row's state once
    std::vector<std::vector<double>> states;
    states.reserve(train.rows.size());
    for (const auto& r : train.rows) {
        const FeatureVector scaled = train.scaler.apply(r.features);
        std::vector<double> s(model.feature_subset.size());
        for (size_t i = 0; i < model.feature_subset.size(); ++i)
            s[i] = scaled[model.feature_subset[i]];
        states.push_back(std::move(s));
    }

    std::mt19937_64 rng(hyper.seed);
    model.net = init_from_rng(static_cast<int>(model.feature_subset.size()), hyper.hidden_dim, 3,
                              rng);

    ReplayBuffer replay(hyper.replay_capacity);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> random_action(0, 2);
    std::uniform_int_distribution<std::size_t> row_pick(0, train.rows.size() - 1);
    std::vector<Transition> batch(static_cast<size_t>(hyper.batch_size));

    for (std::int64_t episode = 0; episode < hyper.episodes; ++episode) {
        const double eps = epsilon_at(hyper, episode);
        const std::size_t row = row_pick(rng);

        int action;
        if (coin(rng) < eps)
            action = random_action(rng);
        else
            action = static_cast<int>(predict_action(model.net, states[row]));

        replay.push({states[row], action,
                     reward(train.rows[row], static_cast<Dataflow>(action), hyper.reward_weight)});

        if (replay.size() >= static_cast<std::size_t>(hyper.batch_size)) {
            std::uniform_int_distribution<std::size_t> pick(0, replay.size() - 1);
            for (int b = 0; b < hyper.batch_size; ++b) batch[b] = replay[pick(rng)];
            sgd_step(model.net, batch, hyper.learning_rate);
        }
    }
    return model;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_block(std::ofstream& out, const std::vector<double>& block) {
    out.write(reinterpret_cast<const char*>(block.data()),
              static_cast<std::streamsize>(block.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>& block) {
    in.read(reinterpret_cast<char*>(block.data()),
            static_cast<std::streamsize>(block.size() * sizeof(double)));
    if (!in) throw ParseError("dqn model: parameter block truncated");
}

}  // namespace

void save_qmodel(const QModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const DqnHyper& h = model.hyper;
    out << "dfsel-dqn 1\n";
    out << "dims " << model.net.in_dim << " " << model.net.hidden_dim << " " << model.net.out_dim
        << "\n";
    out << "hyper " << fmt_double(h.epsilon_start) << " " << fmt_double(h.epsilon_decay) << " "
        << fmt_double(h.epsilon_min) << " " << h.replay_capacity << " " << h.batch_size << " "
        << fmt_double(h.learning_rate) << " " << fmt_double(h.reward_weight) << " " << h.episodes
        << "\n";
    out << "seed " << h.seed << "\n";
    out << "features " << model.feature_subset.size();
    for (int f : model.feature_subset) out << " " << f;
    out << "\n";
    out << "scaler " << feature::kCount << "\n";
    for (int f = 0; f < feature::kCount; ++f)
        out << feature::names()[static_cast<size_t>(f)] << " " << fmt_double(model.scaler.min[f])
            << " " << fmt_double(model.scaler.max[f]) << "\n";
    out << "params " << model.net.param_count() << "\n";
    write_block(out, model.net.w1);
    write_block(out, model.net.b1);
    write_block(out, model.net.w2);
    write_block(out, model.net.b2);
    if (!out) throw IoError("write to '" + path + "' failed");
}

QModel load_qmodel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");

    auto expect_key = [&](const std::string& key) {
        std::string tok;
        if (!(in >> tok) || tok != key)
            throw ParseError("dqn model: expected '" + key + "', got '" + tok + "'");
    };

    expect_key("dfsel-dqn");
    int version = 0;
    in >> version;
    if (version != 1) throw ParseError("unsupported dqn model version");

    QModel m;
    expect_key("dims");
    in >> m.net.in_dim >> m.net.hidden_dim >> m.net.out_dim;
    if (m.net.in_dim < 1 || m.net.hidden_dim < 1 || m.net.out_dim < 1)
        throw ParseError("dqn model: bad dims");
    DqnHyper& h = m.hyper;
    expect_key("hyper");
    in >> h.epsilon_start >> h.epsilon_decay >> h.epsilon_min >> h.replay_capacity >>
        h.batch_size >> h.learning_rate >> h.reward_weight >> h.episodes;
    h.hidden_dim = m.net.hidden_dim;
    expect_key("seed");
    in >> h.seed;
    expect_key("features");
    size_t n_features = 0;
    in >> n_features;
    if (n_features != static_cast<size_t>(m.net.in_dim))
        throw ParseError("dqn model: feature count != in_dim");
    m.feature_subset.resize(n_features);
    for (int& f : m.feature_subset) {
        in >> f;
        if (f < 0 || f >= feature::kCount) throw ParseError("dqn model: feature index range");
    }
    expect_key("scaler");
    int n_scaler = 0;
    in >> n_scaler;
    if (n_scaler != feature::kCount) throw ParseError("dqn model: bad scaler size");
    for (int f = 0; f < feature::kCount; ++f) {
        std::string name;
        in >> name >> m.scaler.min[f] >> m.scaler.max[f];
        if (name != feature::names()[static_cast<size_t>(f)])
            throw ParseError("dqn model: unexpected scaler feature '" + name + "'");
    }
    expect_key("params");
    std::int64_t count = 0;
    in >> count;
    if (!in) throw ParseError("dqn model: truncated header");
    in.get();  // consume the newline before the binary block

    m.net.w1.resize(static_cast<size_t>(m.net.hidden_dim) * m.net.in_dim);
    m.net.b1.resize(m.net.hidden_dim);
    m.net.w2.resize(static_cast<size_t>(m.net.out_dim) * m.net.hidden_dim);
    m.net.b2.resize(m.net.out_dim);
    if (count != m.net.param_count()) throw ParseError("dqn model: parameter count mismatch");
    read_block(in, m.net.w1);
    read_block(in, m.net.b1);
    read_block(in, m.net.w2);
    read_block(in, m.net.b2);
    return m;
}

}  // namespace dfsel
