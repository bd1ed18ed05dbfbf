#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "routelab/checkpoint.hpp"
#include "routelab/problem.hpp"
#include "routelab/tensor.hpp"

namespace routelab::maam {

// ---------------------------------------------------------------------------
// Multi-agent attention model: a permutation-invariant attention encoder
// over depot + customers, and a round-robin decoder that picks one customer
// per step for the active vehicle. Node features are [x, y, demand, open,
// close]; the depot uses demand 0, open 0 and close = the training horizon.
// ---------------------------------------------------------------------------

struct ModelConfig {
  int embed_dim = 128;
  int n_layers = 3;
  int n_heads = 8;
  int fleet_size = 2;
  int ff_hidden = 0;         // 0 -> 4 * embed_dim
  double horizon = 10.0;     // depot window-close feature
  double capacity = 0.0;     // raw-capacity scale of the decoder context (0 -> horizon scale)
  double logit_scale = 0.0;  // 0 -> plain tanh logits; > 0 -> logit_scale * tanh

  int head_dim() const { return embed_dim / n_heads; }
  int hidden_dim() const { return ff_hidden > 0 ? ff_hidden : 4 * embed_dim; }
  int context_dim() const { return (fleet_size + 1) * embed_dim + fleet_size; }

  // Unit scales of the raw inputs, used to keep activations near unit scale
  // at initialization although the network consumes raw problem units
  // (coordinates up to the box size, windows up to the horizon, raw
  // remaining capacities in the context). Plain 1/sqrt(fan_in) starting
  // weights saturate the tanh of the output compatibilities, which stalls
  // learning.
  double coord_scale() const { return 10.0; }
  double window_scale() const { return std::max(10.0, horizon); }
  double demand_scale() const { return 10.0; }
  double capacity_scale() const { return std::max(1.0, capacity > 0.0 ? capacity : window_scale()); }
};

inline void validate_model_config(const ModelConfig& cfg) {
  if (cfg.embed_dim < 1) throw ConfigError("model: embed_dim must be >= 1");
  if (cfg.n_heads < 1) throw ConfigError("model: n_heads must be >= 1");
  if (cfg.embed_dim % cfg.n_heads != 0) {
    throw ConfigError("model: embed_dim " + std::to_string(cfg.embed_dim) +
                      " not divisible by n_heads " + std::to_string(cfg.n_heads));
  }
  if (cfg.n_layers < 0) throw ConfigError("model: n_layers must be >= 0");
  if (cfg.fleet_size < 1) throw ConfigError("model: fleet_size must be >= 1");
  if (cfg.horizon < 0.0) throw ConfigError("model: horizon must be >= 0");
  if (cfg.logit_scale < 0.0) throw ConfigError("model: logit_scale must be >= 0");
}

struct AttentionHeadParams {
  ad::Tensor q_w;    // (in_dim, head_dim)
  ad::Tensor k_w;    // (kv_dim, head_dim)
  ad::Tensor v_w;    // (kv_dim, head_dim)
  ad::Tensor out_w;  // (head_dim, embed_dim)
};

struct AttentionLayerParams {
  std::vector<AttentionHeadParams> heads;
  ad::Tensor ff_in_w;   // (embed_dim, hidden)
  ad::Tensor ff_in_b;   // (hidden)
  ad::Tensor ff_out_w;  // (hidden, embed_dim)
  ad::Tensor ff_out_b;  // (embed_dim)
};

struct DecoderParams {
  std::vector<AttentionHeadParams> glimpse;  // query from context, keys/values from nodes
  ad::Tensor final_q_w;                      // (embed_dim, head_dim)
  ad::Tensor final_k_w;                      // (embed_dim, head_dim)
};

struct ModelParams {
  ModelConfig config;
  ad::Tensor input_w;  // (5, embed_dim)
  ad::Tensor input_b;  // (embed_dim)
  std::vector<AttentionLayerParams> layers;
  DecoderParams decoder;

  std::vector<ad::Tensor> all() const {
    std::vector<ad::Tensor> out{input_w, input_b};
    for (const auto& layer : layers) {
      for (const auto& head : layer.heads) {
        out.push_back(head.q_w);
        out.push_back(head.k_w);
        out.push_back(head.v_w);
        out.push_back(head.out_w);
      }
      out.push_back(layer.ff_in_w);
      out.push_back(layer.ff_in_b);
      out.push_back(layer.ff_out_w);
      out.push_back(layer.ff_out_b);
    }
    for (const auto& head : decoder.glimpse) {
      out.push_back(head.q_w);
      out.push_back(head.k_w);
      out.push_back(head.v_w);
      out.push_back(head.out_w);
    }
    out.push_back(decoder.final_q_w);
    out.push_back(decoder.final_k_w);
    return out;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out{"input.w", "input.b"};
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string lp = "enc." + std::to_string(l);
      for (std::size_t z = 0; z < layers[l].heads.size(); ++z) {
        const std::string hp = lp + ".attn." + std::to_string(z);
        out.push_back(hp + ".q.w");
        out.push_back(hp + ".k.w");
        out.push_back(hp + ".v.w");
        out.push_back(hp + ".out.w");
      }
      out.push_back(lp + ".ff.in.w");
      out.push_back(lp + ".ff.in.b");
      out.push_back(lp + ".ff.out.w");
      out.push_back(lp + ".ff.out.b");
    }
    for (std::size_t z = 0; z < decoder.glimpse.size(); ++z) {
      const std::string hp = "dec.glimpse." + std::to_string(z);
      out.push_back(hp + ".q.w");
      out.push_back(hp + ".k.w");
      out.push_back(hp + ".v.w");
      out.push_back(hp + ".out.w");
    }
    out.push_back("dec.final.q.w");
    out.push_back("dec.final.k.w");
    return out;
  }

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed, bool requires_grad = true) {
    validate_model_config(cfg);
    Rng rng(seed);
    auto uniform_fan_in = [&](int in_dim, int out_dim, double gain = 1.0, bool vector = false) {
      const double bound = gain / std::sqrt(static_cast<double>(in_dim));
      const std::size_t n = static_cast<std::size_t>(in_dim) * static_cast<std::size_t>(out_dim);
      std::vector<double> data(vector ? static_cast<std::size_t>(out_dim) : n);
      for (double& v : data) v = rng.uniform(-bound, bound);
      ad::Shape shape = vector ? ad::Shape{out_dim} : ad::Shape{in_dim, out_dim};
      return ad::Tensor::leaf(std::move(shape), std::move(data), requires_grad);
    };
    const int d = cfg.embed_dim;
    const int dk = cfg.head_dim();
    const int hidden = cfg.hidden_dim();
    const int ctx = cfg.context_dim();

    // Per-row bounds whiten heterogeneous raw inputs: row r of a (in, out)
    // matrix multiplies input r, so its bound is scaled by that input's unit.
    auto uniform_rows = [&](int in_dim, int out_dim, const std::vector<double>& row_scale) {
      std::vector<double> data(static_cast<std::size_t>(in_dim) * static_cast<std::size_t>(out_dim));
      const double base = std::sqrt(3.0) / std::sqrt(static_cast<double>(in_dim));
      for (int r = 0; r < in_dim; ++r) {
        const double bound = base / row_scale[static_cast<std::size_t>(r)];
        for (int c = 0; c < out_dim; ++c) {
          data[static_cast<std::size_t>(r) * out_dim + c] = rng.uniform(-bound, bound);
        }
      }
      return ad::Tensor::leaf({in_dim, out_dim}, std::move(data), requires_grad);
    };

    ModelParams p;
    p.config = cfg;
    const std::vector<double> feature_scales{cfg.coord_scale(), cfg.coord_scale(),
                                             cfg.demand_scale(), cfg.window_scale(),
                                             cfg.window_scale()};
    p.input_w = uniform_rows(5, d, feature_scales);
    p.input_b = uniform_fan_in(5, d, 1.0, true);
    const double head_sum_gain = 1.0 / std::sqrt(static_cast<double>(cfg.n_heads));
    for (int l = 0; l < cfg.n_layers; ++l) {
      AttentionLayerParams layer;
      for (int z = 0; z < cfg.n_heads; ++z) {
        AttentionHeadParams head;
        head.q_w = uniform_fan_in(d, dk);
        head.k_w = uniform_fan_in(d, dk);
        head.v_w = uniform_fan_in(d, dk);
        head.out_w = uniform_fan_in(dk, d, head_sum_gain);
        layer.heads.push_back(std::move(head));
      }
      layer.ff_in_w = uniform_fan_in(d, hidden);
      layer.ff_in_b = uniform_fan_in(d, hidden, 1.0, true);
      layer.ff_out_w = uniform_fan_in(hidden, d);
      layer.ff_out_b = uniform_fan_in(hidden, d, 1.0, true);
      p.layers.push_back(std::move(layer));
    }
    // Context rows: embeddings are near unit scale, the per-vehicle capacity
    // slots carry raw capacities.
    std::vector<double> context_scales(static_cast<std::size_t>(ctx), 1.0);
    for (int m = 0; m < cfg.fleet_size; ++m) {
      context_scales[static_cast<std::size_t>((m + 2) * d + m)] = cfg.capacity_scale();
    }
    for (int z = 0; z < cfg.n_heads; ++z) {
      AttentionHeadParams head;
      head.q_w = uniform_rows(ctx, dk, context_scales);
      head.k_w = uniform_fan_in(d, dk);
      head.v_w = uniform_fan_in(d, dk);
      head.out_w = uniform_fan_in(dk, d, head_sum_gain);
      p.decoder.glimpse.push_back(std::move(head));
    }
    p.decoder.final_q_w = uniform_fan_in(d, dk);
    p.decoder.final_k_w = uniform_fan_in(d, dk);
    return p;
  }

  ModelParams clone(bool requires_grad) const {
    ModelParams out = *this;  // copies Tensor handles; now replace with fresh leaves
    auto fresh = [requires_grad](ad::Tensor& t) {
      t = ad::Tensor::leaf(t.shape(), t.value(), requires_grad);
    };
    fresh(out.input_w);
    fresh(out.input_b);
    for (auto& layer : out.layers) {
      for (auto& head : layer.heads) {
        fresh(head.q_w);
        fresh(head.k_w);
        fresh(head.v_w);
        fresh(head.out_w);
      }
      fresh(layer.ff_in_w);
      fresh(layer.ff_in_b);
      fresh(layer.ff_out_w);
      fresh(layer.ff_out_b);
    }
    for (auto& head : out.decoder.glimpse) {
      fresh(head.q_w);
      fresh(head.k_w);
      fresh(head.v_w);
      fresh(head.out_w);
    }
    fresh(out.decoder.final_q_w);
    fresh(out.decoder.final_k_w);
    return out;
  }

  void copy_values_from(const ModelParams& other) {
    auto mine = all();
    auto theirs = other.all();
    if (mine.size() != theirs.size()) throw StateError("model: parameter lists differ in size");
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (mine[i].shape() != theirs[i].shape()) throw StateError("model: parameter shape mismatch");
      mine[i].value_mut() = theirs[i].value();
    }
  }
};

// ---- encoder ---------------------------------------------------------------

inline ad::Tensor node_features(const Instance& inst, double horizon) {
  const int n = inst.n_customers();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(n + 1) * 5);
  data.insert(data.end(), {inst.depot.x, inst.depot.y, 0.0, 0.0, horizon});
  for (const Customer& c : inst.customers) {
    data.insert(data.end(), {c.coord.x, c.coord.y, c.demand, c.window_open, c.window_close});
  }
  return ad::Tensor::constant({n + 1, 5}, std::move(data));
}

inline ad::Tensor embed_inputs(const Instance& inst, const ModelParams& params) {
  return ad::add(ad::matmul(node_features(inst, params.config.horizon), params.input_w),
                 params.input_b);
}

// One encoder block: multi-head self-attention with a skip connection, then
// a ReLU feed-forward with a second skip.
inline ad::Tensor attention_layer(const ad::Tensor& h, const AttentionLayerParams& layer) {
  const int dk = layer.heads.front().q_w.shape()[1];
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  ad::Tensor mha;
  for (const auto& head : layer.heads) {
    const ad::Tensor q = ad::matmul(h, head.q_w);
    const ad::Tensor k = ad::matmul(h, head.k_w);
    const ad::Tensor v = ad::matmul(h, head.v_w);
    const ad::Tensor scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_dk);
    const ad::Tensor attn = ad::softmax(scores);
    const ad::Tensor head_out = ad::matmul(ad::matmul(attn, v), head.out_w);
    mha = mha.defined() ? ad::add(mha, head_out) : head_out;
  }
  const ad::Tensor skip = ad::add(h, mha);
  const ad::Tensor hidden = ad::relu(ad::add(ad::matmul(skip, layer.ff_in_w), layer.ff_in_b));
  const ad::Tensor ff = ad::add(ad::matmul(hidden, layer.ff_out_w), layer.ff_out_b);
  return ad::add(skip, ff);
}

struct EncoderOutput {
  ad::Tensor node_embeddings;  // (N+1, embed_dim); row 0 is the depot
  ad::Tensor graph_embedding;  // (embed_dim); mean over customer rows
};

inline EncoderOutput encode(const Instance& inst, const ModelParams& params) {
  ad::Tensor h = embed_inputs(inst, params);
  for (const auto& layer : params.layers) h = attention_layer(h, layer);
  EncoderOutput out;
  out.node_embeddings = h;
  out.graph_embedding = ad::mean(ad::slice_rows(h, 1, inst.n_customers() + 1), 0);
  return out;
}

// ---- decoder ---------------------------------------------------------------

enum class DecodeMode { Greedy, Sample };

struct DecoderState {
  int timestep = 0;  // customer selections made so far
  std::vector<std::uint8_t> visited;       // by customer id; slot 0 unused
  std::vector<double> remaining_capacity;  // per vehicle
  std::vector<int> last_node;              // per vehicle; 0 = depot
  std::vector<double> elapsed;             // per vehicle travel time
  std::vector<std::uint8_t> retired;       // per vehicle
  Routes routes;                           // per vehicle, in visit order
  std::vector<double> arrival;             // by customer id; slot 0 unused
  int visited_count = 0;
  int active_vehicle = 0;

  static DecoderState initial(const Instance& inst) {
    DecoderState s;
    const std::size_t n = static_cast<std::size_t>(inst.n_customers());
    const std::size_t m = static_cast<std::size_t>(inst.fleet_size);
    s.visited.assign(n + 1, 0);
    s.remaining_capacity.assign(m, inst.capacity);
    s.last_node.assign(m, 0);
    s.elapsed.assign(m, 0.0);
    s.retired.assign(m, 0);
    s.routes.assign(m, {});
    s.arrival.assign(n + 1, 0.0);
    return s;
  }

  int live_vehicles() const {
    int live = 0;
    for (std::uint8_t r : retired) live += r ? 0 : 1;
    return live;
  }

  // Advances the round-robin cursor to the next non-retired vehicle;
  // sets -1 when the whole fleet is retired.
  void advance_active() {
    const int m = static_cast<int>(retired.size());
    for (int step = 1; step <= m; ++step) {
      const int v = (active_vehicle + step) % m;
      if (!retired[static_cast<std::size_t>(v)]) {
        active_vehicle = v;
        return;
      }
    }
    active_vehicle = -1;
  }
};

// Infeasible actions for the given vehicle: already-served customers and
// those whose demand exceeds its remaining capacity.
inline std::vector<std::uint8_t> action_mask(const Instance& inst, const DecoderState& state,
                                             int vehicle) {
  const int n = inst.n_customers();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
  const double cap = state.remaining_capacity[static_cast<std::size_t>(vehicle)];
  for (int id = 1; id <= n; ++id) {
    if (state.visited[static_cast<std::size_t>(id)] || inst.customer(id).demand > cap) {
      mask[static_cast<std::size_t>(id - 1)] = 1;
    }
  }
  return mask;
}

// Per-rollout tensors that do not depend on the decoder state.
struct DecoderCache {
  std::vector<ad::Tensor> glimpse_k;  // per head: (N+1, head_dim)
  std::vector<ad::Tensor> glimpse_v;
  ad::Tensor final_k;  // (N, head_dim), customers only
};

inline DecoderCache build_decoder_cache(const EncoderOutput& enc, const ModelParams& params) {
  DecoderCache cache;
  for (const auto& head : params.decoder.glimpse) {
    cache.glimpse_k.push_back(ad::matmul(enc.node_embeddings, head.k_w));
    cache.glimpse_v.push_back(ad::matmul(enc.node_embeddings, head.v_w));
  }
  const int n = enc.node_embeddings.shape()[0] - 1;
  cache.final_k = ad::matmul(ad::slice_rows(enc.node_embeddings, 1, n + 1), params.decoder.final_k_w);
  return cache;
}

// Context embedding: [graph; last-node embedding and remaining capacity for
// each vehicle in fleet order].
inline ad::Tensor build_context(const DecoderState& state, const EncoderOutput& enc) {
  std::vector<ad::Tensor> parts;
  parts.push_back(enc.graph_embedding);
  for (std::size_t m = 0; m < state.last_node.size(); ++m) {
    parts.push_back(ad::row(enc.node_embeddings, state.last_node[m]));
    parts.push_back(ad::Tensor::scalar(state.remaining_capacity[m]));
  }
  return ad::concat(parts);
}

struct DecodeStep {
  int vehicle = -1;
  int customer = -1;  // -1 on a retirement no-op
  ad::Tensor log_prob;
  std::vector<double> probs;  // filled when want_probs
};

// One decoder step for the active vehicle. If every customer is masked for
// it, the vehicle retires and a no-op step with log-prob 0 is returned (the
// timestep is not consumed). `forced` replays a recorded action instead of
// sampling/argmax.
inline DecodeStep decode_step(const Instance& inst, const EncoderOutput& enc,
                              const DecoderCache& cache, const ModelParams& params,
                              DecoderState& state, DecodeMode mode, Rng* rng, int forced = -1,
                              bool want_probs = false) {
  if (state.active_vehicle < 0) {
    throw DecodeError("decode: all vehicles retired with customers unserved");
  }
  const ModelConfig& cfg = params.config;
  const int m = state.active_vehicle;
  DecodeStep out;
  out.vehicle = m;

  const std::vector<std::uint8_t> mask = action_mask(inst, state, m);
  bool any_feasible = false;
  for (std::uint8_t bit : mask) {
    if (!bit) {
      any_feasible = true;
      break;
    }
  }
  if (!any_feasible) {
    state.retired[static_cast<std::size_t>(m)] = 1;
    state.advance_active();
    if (state.active_vehicle < 0 && state.visited_count < inst.n_customers()) {
      throw DecodeError("decode: all vehicles retired with customers unserved");
    }
    out.log_prob = ad::Tensor::scalar(0.0);
    return out;
  }

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  const ad::Tensor context = build_context(state, enc);
  ad::Tensor refined;
  for (std::size_t z = 0; z < params.decoder.glimpse.size(); ++z) {
    const auto& head = params.decoder.glimpse[z];
    const ad::Tensor q = ad::matmul(context, head.q_w);
    const ad::Tensor scores = ad::scale(ad::matmul(cache.glimpse_k[z], q), inv_sqrt_dk);
    const ad::Tensor attn = ad::softmax(scores);
    const ad::Tensor val = ad::matmul(attn, cache.glimpse_v[z]);
    const ad::Tensor head_out = ad::matmul(val, head.out_w);
    refined = refined.defined() ? ad::add(refined, head_out) : head_out;
  }

  const ad::Tensor query = ad::matmul(refined, params.decoder.final_q_w);
  ad::Tensor logits = ad::tanh(ad::scale(ad::matmul(cache.final_k, query), inv_sqrt_dk));
  if (cfg.logit_scale > 0.0) logits = ad::scale(logits, cfg.logit_scale);
  const ad::Tensor masked = ad::masked_fill(logits, mask, -std::numeric_limits<double>::infinity());
  const ad::Tensor probs = ad::softmax(masked);
  const auto& pv = probs.value();

  int chosen;
  if (forced >= 0) {
    if (forced < 1 || forced > inst.n_customers() || mask[static_cast<std::size_t>(forced - 1)]) {
      throw DecodeError("decode: forced action " + std::to_string(forced) + " is masked");
    }
    chosen = forced;
  } else if (mode == DecodeMode::Greedy) {
    int arg = 0;
    for (int i = 1; i < static_cast<int>(pv.size()); ++i) {
      if (pv[static_cast<std::size_t>(i)] > pv[static_cast<std::size_t>(arg)]) arg = i;
    }
    chosen = arg + 1;
  } else {
    if (!rng) throw InvalidArgumentError("decode: sampling requires an rng");
    const double u = rng->uniform();
    double cum = 0.0;
    int picked = -1;
    int last_unmasked = -1;
    for (int i = 0; i < static_cast<int>(pv.size()); ++i) {
      if (mask[static_cast<std::size_t>(i)]) continue;
      last_unmasked = i;
      cum += pv[static_cast<std::size_t>(i)];
      if (u < cum) {
        picked = i;
        break;
      }
    }
    chosen = (picked >= 0 ? picked : last_unmasked) + 1;
  }

  out.customer = chosen;
  out.log_prob = ad::log(ad::pick(probs, chosen - 1));
  if (want_probs) out.probs = pv;

  const Customer& cust = inst.customer(chosen);
  const std::size_t mi = static_cast<std::size_t>(m);
  state.visited[static_cast<std::size_t>(chosen)] = 1;
  ++state.visited_count;
  state.routes[mi].push_back(chosen);
  const Vec2 from = state.last_node[mi] == 0 ? inst.depot : inst.customer(state.last_node[mi]).coord;
  const double leg = euclidean_distance(from, cust.coord);
  state.elapsed[mi] += leg;
  state.arrival[static_cast<std::size_t>(chosen)] = state.elapsed[mi];
  state.remaining_capacity[mi] = std::max(0.0, state.remaining_capacity[mi] - cust.demand);
  state.last_node[mi] = chosen;
  ++state.timestep;
  state.advance_active();
  if (state.active_vehicle < 0 && state.visited_count < inst.n_customers()) {
    throw DecodeError("decode: all vehicles retired with customers unserved");
  }
  return out;
}

struct RolloutResult {
  Solution solution;
  ad::Tensor log_prob;            // scalar; connected to the tape when params require grad
  std::vector<int> actions;       // customers in selection order
  std::vector<DecodeStep> steps;  // filled when trace
};

struct RolloutOptions {
  bool trace = false;
  const std::vector<int>* forced_actions = nullptr;
};

inline RolloutResult rollout(const Instance& inst, const ModelParams& params, DecodeMode mode,
                             Rng* rng = nullptr, const RolloutOptions& opts = {}) {
  validate_instance(inst);
  if (inst.fleet_size != params.config.fleet_size) {
    throw ConfigError("rollout: instance fleet size " + std::to_string(inst.fleet_size) +
                      " does not match model fleet size " +
                      std::to_string(params.config.fleet_size));
  }
  const EncoderOutput enc = encode(inst, params);
  const DecoderCache cache = build_decoder_cache(enc, params);
  DecoderState state = DecoderState::initial(inst);

  RolloutResult result;
  ad::Tensor total;
  std::size_t forced_index = 0;
  while (state.visited_count < inst.n_customers()) {
    int forced = -1;
    if (opts.forced_actions) {
      // Retirement no-ops consume no recorded action; peek only.
      if (forced_index >= opts.forced_actions->size()) {
        throw DecodeError("rollout: forced action list exhausted");
      }
      forced = (*opts.forced_actions)[forced_index];
    }
    DecodeStep step = decode_step(inst, enc, cache, params, state, mode, rng,
                                  /*forced=*/forced >= 0 ? forced : -1,
                                  /*want_probs=*/opts.trace);
    if (step.customer >= 0) {
      if (opts.forced_actions) ++forced_index;
      result.actions.push_back(step.customer);
      total = total.defined() ? ad::add(total, step.log_prob) : step.log_prob;
    }
    if (opts.trace) result.steps.push_back(std::move(step));
  }
  result.log_prob = total.defined() ? total : ad::Tensor::scalar(0.0);
  result.solution = evaluate_solution(inst, state.routes);
  return result;
}

// ---- checkpointing ---------------------------------------------------------

inline nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["embed_dim"] = cfg.embed_dim;
  j["n_layers"] = cfg.n_layers;
  j["n_heads"] = cfg.n_heads;
  j["fleet_size"] = cfg.fleet_size;
  j["ff_hidden"] = cfg.ff_hidden;
  j["horizon"] = cfg.horizon;
  j["capacity"] = cfg.capacity;
  j["logit_scale"] = cfg.logit_scale;
  return j;
}

inline ModelConfig config_from_json(const nlohmann::ordered_json& j) {
  ModelConfig cfg;
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.n_layers = j.at("n_layers").get<int>();
  cfg.n_heads = j.at("n_heads").get<int>();
  cfg.fleet_size = j.at("fleet_size").get<int>();
  cfg.ff_hidden = j.at("ff_hidden").get<int>();
  cfg.horizon = j.at("horizon").get<double>();
  cfg.capacity = j.at("capacity").get<double>();
  cfg.logit_scale = j.at("logit_scale").get<double>();
  validate_model_config(cfg);
  return cfg;
}

inline void save_model(const std::string& path, const ModelParams& params,
                       const nlohmann::ordered_json& extra_meta = nlohmann::ordered_json::object()) {
  nlohmann::ordered_json meta;
  meta["config"] = config_to_json(params.config);
  for (const auto& item : extra_meta.items()) meta[item.key()] = item.value();
  ad::NamedTensors tensors;
  const auto names = params.names();
  const auto values = params.all();
  for (std::size_t i = 0; i < names.size(); ++i) tensors.entries.emplace_back(names[i], values[i]);
  ad::save_checkpoint(path, tensors, meta.dump());
}

inline ModelParams load_model(const std::string& path,
                              nlohmann::ordered_json* meta_out = nullptr) {
  std::string meta_str;
  const ad::NamedTensors tensors = ad::load_checkpoint(path, &meta_str);
  nlohmann::ordered_json meta;
  try {
    meta = nlohmann::ordered_json::parse(meta_str);
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint " + path + ": bad metadata: " + e.what());
  }
  if (meta_out) *meta_out = meta;
  const ModelConfig cfg = config_from_json(meta.at("config"));
  ModelParams params = ModelParams::init(cfg, 0, /*requires_grad=*/false);
  const auto names = params.names();
  auto slots = params.all();
  if (tensors.entries.size() != names.size()) {
    throw Error("checkpoint " + path + ": expected " + std::to_string(names.size()) +
                " tensors, found " + std::to_string(tensors.entries.size()));
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const ad::Tensor* t = tensors.find(names[i]);
    if (!t) throw Error("checkpoint " + path + ": missing tensor \"" + names[i] + "\"");
    if (t->shape() != slots[i].shape()) {
      throw Error("checkpoint " + path + ": tensor \"" + names[i] + "\" has shape " +
                  ad::shape_str(t->shape()) + ", expected " + ad::shape_str(slots[i].shape()));
    }
    slots[i].value_mut() = t->value();
  }
  return params;
}

}  // namespace routelab::maam
