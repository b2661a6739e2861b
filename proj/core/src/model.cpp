#include "pdfscan/model.hpp"

#include <cmath>
#include <map>

#include "pdfscan/errors.hpp"

namespace pdfscan::models {

char arch_letter(ArchitectureId arch) {
  switch (arch) {
    case ArchitectureId::A: return 'A';
    case ArchitectureId::B: return 'B';
    default: return 'C';
  }
}

ArchitectureId arch_from_letter(char letter) {
  switch (letter) {
    case 'A': return ArchitectureId::A;
    case 'B': return ArchitectureId::B;
    case 'C': return ArchitectureId::C;
    default:
      throw UnknownArchError(std::string("unknown architecture id: '") +
                             letter + "'");
  }
}

ModelConfig ModelConfig::canonical(ArchitectureId arch) {
  ModelConfig cfg;
  cfg.arch = arch;
  switch (arch) {
    case ArchitectureId::A:
      cfg.convs = {{16, 4, 128, false}};
      break;
    case ArchitectureId::B:
      cfg.convs = {{16, 4, 128, false}};
      cfg.hidden = 128;
      cfg.dropout_p = 0.25;
      break;
    case ArchitectureId::C:
      cfg.convs = {{16, 4, 20, true}, {16, 4, 40, true}, {4, 2, 80, true}};
      cfg.hidden = 80;
      cfg.hidden_batch_norm = true;
      break;
  }
  return cfg;
}

void ModelConfig::validate() const {
  if (embed_dim < 1) throw ValidationError("embed_dim must be >= 1");
  if (input_length < 1) throw ValidationError("input_length must be >= 1");
  if (convs.empty()) throw ValidationError("at least one conv stage required");
  for (const auto& c : convs) {
    if (c.window < 1 || c.stride < 1 || c.kernels < 1) {
      throw ValidationError("conv window/stride/kernels must be >= 1");
    }
  }
  stage_lengths();  // throws if any stage output collapses below length 1
  if (hidden < 0) throw ValidationError("hidden width must be >= 0");
  if (hidden == 0 && hidden_batch_norm) {
    throw ValidationError("hidden_batch_norm requires a hidden layer");
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
    throw ValidationError("dropout_p must lie in [0, 1)");
  }
  if (dropout_p > 0.0 && hidden == 0) {
    throw ValidationError("dropout applies after the hidden layer; none set");
  }
}

std::vector<int> ModelConfig::stage_lengths() const {
  std::vector<int> lengths;
  int len = input_length;
  for (std::size_t s = 0; s < convs.size(); ++s) {
    if (len < convs[s].window) {
      throw ValidationError("conv stage " + std::to_string(s) +
                            " input shorter than its window");
    }
    len = nn::conv_output_length(len, convs[s].window, convs[s].stride);
    lengths.push_back(len);
  }
  return lengths;
}

int ModelConfig::feature_width() const {
  if (convs.empty()) throw ValidationError("no conv stages configured");
  return convs.back().kernels;
}

bool ModelConfig::uses_batch_norm() const {
  for (const auto& c : convs) {
    if (c.batch_norm) return true;
  }
  return hidden_batch_norm;
}

void Network::build_layers() {
  config_.validate();
  embed_ = nn::Embedding{};
  embed_.dim = config_.embed_dim;
  embed_.weight.assign(static_cast<std::size_t>(config_.embed_dim) * 256, 0.0);

  convs_.clear();
  conv_bns_.clear();
  int channels = config_.embed_dim;
  for (const auto& spec : config_.convs) {
    nn::Conv1D conv;
    conv.window = spec.window;
    conv.stride = spec.stride;
    conv.kernels = spec.kernels;
    conv.in_channels = channels;
    conv.weight.assign(
        static_cast<std::size_t>(spec.kernels) * spec.window * channels, 0.0);
    conv.bias.assign(static_cast<std::size_t>(spec.kernels), 0.0);
    convs_.push_back(std::move(conv));
    if (spec.batch_norm) {
      nn::BatchNorm bn;
      bn.channels = spec.kernels;
      bn.init();
      conv_bns_.emplace_back(std::move(bn));
    } else {
      conv_bns_.emplace_back(std::nullopt);
    }
    channels = spec.kernels;
  }

  hidden_.reset();
  hidden_bn_.reset();
  int head_in = channels;
  if (config_.hidden > 0) {
    nn::Dense h;
    h.in = channels;
    h.out = config_.hidden;
    h.weight.assign(static_cast<std::size_t>(h.out) * h.in, 0.0);
    h.bias.assign(static_cast<std::size_t>(h.out), 0.0);
    hidden_ = std::move(h);
    if (config_.hidden_batch_norm) {
      nn::BatchNorm bn;
      bn.channels = config_.hidden;
      bn.init();
      hidden_bn_ = std::move(bn);
    }
    head_in = config_.hidden;
  }
  out_ = nn::Dense{};
  out_.in = head_in;
  out_.out = 1;
  out_.weight.assign(static_cast<std::size_t>(head_in), 0.0);
  out_.bias.assign(1, 0.0);
}

Network::Network(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  build_layers();
  // Per-layer init streams so a layer's draw does not depend on the sizes
  // of the layers before it.
  Rng embed_rng(derive_seed(seed, 100));
  embed_.init(embed_rng);
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    Rng conv_rng(derive_seed(seed, 101 + s));
    convs_[s].init(conv_rng);
  }
  if (hidden_) {
    Rng hidden_rng(derive_seed(seed, 120));
    hidden_->init(hidden_rng);
  }
  Rng out_rng(derive_seed(seed, 121));
  out_.init(out_rng);
}

Network::Network(const ModelCheckpoint& checkpoint)
    : config_(checkpoint.config) {
  build_layers();
  load_blocks(checkpoint.blocks);
}

std::vector<Network::BlockRef> Network::blocks() {
  std::vector<BlockRef> out;
  out.push_back({"embed.W", {config_.embed_dim, 256}, true, &embed_.weight});
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    auto& conv = convs_[s];
    const std::string prefix = "conv" + std::to_string(s);
    out.push_back({prefix + ".W",
                   {conv.kernels, conv.window * conv.in_channels},
                   true,
                   &conv.weight});
    out.push_back({prefix + ".b", {conv.kernels}, true, &conv.bias});
    if (conv_bns_[s]) {
      auto& bn = *conv_bns_[s];
      out.push_back({prefix + ".bn.gamma", {bn.channels}, true, &bn.gamma});
      out.push_back({prefix + ".bn.beta", {bn.channels}, true, &bn.beta});
      out.push_back(
          {prefix + ".bn.running_mean", {bn.channels}, false, &bn.running_mean});
      out.push_back(
          {prefix + ".bn.running_var", {bn.channels}, false, &bn.running_var});
    }
  }
  if (hidden_) {
    out.push_back({"hidden.W", {hidden_->out, hidden_->in}, true, &hidden_->weight});
    out.push_back({"hidden.b", {hidden_->out}, true, &hidden_->bias});
    if (hidden_bn_) {
      auto& bn = *hidden_bn_;
      out.push_back({"hidden.bn.gamma", {bn.channels}, true, &bn.gamma});
      out.push_back({"hidden.bn.beta", {bn.channels}, true, &bn.beta});
      out.push_back(
          {"hidden.bn.running_mean", {bn.channels}, false, &bn.running_mean});
      out.push_back(
          {"hidden.bn.running_var", {bn.channels}, false, &bn.running_var});
    }
  }
  out.push_back({"out.W", {1, out_.in}, true, &out_.weight});
  out.push_back({"out.b", {1}, true, &out_.bias});
  return out;
}

std::vector<Network::BlockRef> Network::trainable_blocks() {
  std::vector<BlockRef> out;
  for (auto& b : blocks()) {
    if (b.trainable) out.push_back(b);
  }
  return out;
}

std::size_t Network::param_count() {
  std::size_t n = 0;
  for (const auto& b : trainable_blocks()) n += b.data->size();
  return n;
}

void Network::load_blocks(const std::vector<ParamBlock>& loaded) {
  std::map<std::string, const ParamBlock*> by_name;
  for (const auto& b : loaded) {
    if (!by_name.emplace(b.name, &b).second) {
      throw CheckpointShapeError("duplicate parameter block: " + b.name);
    }
  }
  auto skeleton = blocks();
  for (auto& slot : skeleton) {
    const auto it = by_name.find(slot.name);
    if (it == by_name.end()) {
      throw CheckpointShapeError("missing parameter block: " + slot.name);
    }
    const ParamBlock& src = *it->second;
    if (src.shape != slot.shape || src.values.size() != slot.data->size()) {
      throw CheckpointShapeError("shape mismatch for parameter block: " +
                                 slot.name);
    }
    for (std::size_t i = 0; i < src.values.size(); ++i) {
      (*slot.data)[i] = static_cast<double>(src.values[i]);
    }
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw CheckpointShapeError("unexpected parameter block: " +
                               by_name.begin()->first);
  }
}

ModelCheckpoint Network::to_checkpoint(const TrainMeta& meta) {
  ModelCheckpoint ckpt;
  ckpt.config = config_;
  ckpt.meta = meta;
  for (const auto& b : blocks()) {
    ParamBlock pb;
    pb.name = b.name;
    pb.shape = b.shape;
    pb.trainable = b.trainable;
    pb.values.resize(b.data->size());
    for (std::size_t i = 0; i < b.data->size(); ++i) {
      pb.values[i] = static_cast<float>((*b.data)[i]);
    }
    ckpt.blocks.push_back(std::move(pb));
  }
  return ckpt;
}

Network::Evaluation Network::evaluate(std::span<const std::uint8_t> bytes) const {
  nn::Tensor2D a = embed_.forward(bytes, config_.input_length);
  for (std::size_t s = 0; s < convs_.size(); ++s) {
    a = convs_[s].forward(a);
    if (conv_bns_[s]) conv_bns_[s]->forward_eval(a);
    nn::relu_inplace(a);
  }
  const auto pool = nn::global_max_pool(a);

  Evaluation ev;
  ev.features = pool.values;
  std::vector<double> v = pool.values;
  if (hidden_) {
    v = hidden_->forward(v);
    if (hidden_bn_) {
      nn::Tensor2D t(1, hidden_bn_->channels);
      std::copy(v.begin(), v.end(), t.v.begin());
      hidden_bn_->forward_eval(t);
      std::copy(t.v.begin(), t.v.end(), v.begin());
    }
    nn::relu_inplace(v);
    // dropout is identity in eval mode
  }
  ev.score = nn::sigmoid(out_.forward(v)[0]);
  return ev;
}

double Network::batch_loss(
    const std::vector<std::span<const std::uint8_t>>& batch,
    const std::vector<double>& labels, Rng& dropout_rng,
    double positive_weight) {
  nn::require_shape(!batch.empty() && batch.size() == labels.size(),
                    "batch_loss: batch/label size mismatch");
  const std::size_t B = batch.size();
  const std::size_t S = convs_.size();

  std::vector<nn::Tensor2D> act(B);
  for (std::size_t b = 0; b < B; ++b) {
    act[b] = embed_.forward(batch[b], config_.input_length);
  }
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t b = 0; b < B; ++b) act[b] = convs_[s].forward(act[b]);
    if (conv_bns_[s]) conv_bns_[s]->forward_train(act, /*update_running=*/false);
    for (std::size_t b = 0; b < B; ++b) nn::relu_inplace(act[b]);
  }
  std::vector<std::vector<double>> head_in(B);
  if (hidden_) {
    std::vector<nn::Tensor2D> h(B);
    for (std::size_t b = 0; b < B; ++b) {
      const auto pooled = nn::global_max_pool(act[b]).values;
      const auto hv = hidden_->forward(pooled);
      h[b] = nn::Tensor2D(1, hidden_->out);
      std::copy(hv.begin(), hv.end(), h[b].v.begin());
    }
    if (hidden_bn_) hidden_bn_->forward_train(h, /*update_running=*/false);
    for (std::size_t b = 0; b < B; ++b) {
      head_in[b] = h[b].v;
      nn::relu_inplace(head_in[b]);
      if (config_.dropout_p > 0.0) {
        const auto mask =
            nn::dropout_mask(head_in[b].size(), config_.dropout_p, dropout_rng);
        for (std::size_t j = 0; j < mask.size(); ++j) head_in[b][j] *= mask[j];
      }
    }
  } else {
    for (std::size_t b = 0; b < B; ++b) {
      head_in[b] = nn::global_max_pool(act[b]).values;
    }
  }
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double z = out_.forward(head_in[b])[0];
    const double w = labels[b] > 0.5 ? positive_weight : 1.0;
    loss += w * nn::bce_loss_from_logit(z, labels[b]);
  }
  return loss / static_cast<double>(B);
}

double Network::forward_backward(
    const std::vector<std::span<const std::uint8_t>>& batch,
    const std::vector<double>& labels, Rng& dropout_rng,
    bool update_running_stats, std::vector<std::vector<double>>& grads,
    double positive_weight) {
  nn::require_shape(!batch.empty() && batch.size() == labels.size(),
                    "forward_backward: batch/label size mismatch");
  const std::size_t B = batch.size();
  const std::size_t S = convs_.size();

  // ---- forward, caching what backward needs ----
  std::vector<nn::Tensor2D> embedded(B);
  for (std::size_t b = 0; b < B; ++b) {
    embedded[b] = embed_.forward(batch[b], config_.input_length);
  }
  // conv_out: pre-batch-norm maps (batch-norm backward needs them);
  // act: post-ReLU maps (the ReLU mask can be read off act > 0).
  std::vector<std::vector<nn::Tensor2D>> conv_out(S), act(S);
  std::vector<nn::BatchNorm::Cache> bn_cache(S);
  const std::vector<nn::Tensor2D>* cur = &embedded;
  for (std::size_t s = 0; s < S; ++s) {
    conv_out[s].resize(B);
    for (std::size_t b = 0; b < B; ++b) {
      conv_out[s][b] = convs_[s].forward((*cur)[b]);
    }
    act[s] = conv_out[s];
    if (conv_bns_[s]) {
      bn_cache[s] = conv_bns_[s]->forward_train(act[s], update_running_stats);
    }
    for (std::size_t b = 0; b < B; ++b) nn::relu_inplace(act[s][b]);
    cur = &act[s];
  }

  std::vector<nn::PoolResult> pools(B);
  std::vector<std::vector<double>> pooled(B);
  for (std::size_t b = 0; b < B; ++b) {
    pools[b] = nn::global_max_pool(act[S - 1][b]);
    pooled[b] = pools[b].values;
  }

  std::vector<nn::Tensor2D> h_pre(B);  // hidden dense output, pre-norm
  nn::BatchNorm::Cache hidden_cache;
  std::vector<std::vector<double>> h_relu(B), mask(B), head_in(B);
  if (hidden_) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto hv = hidden_->forward(pooled[b]);
      h_pre[b] = nn::Tensor2D(1, hidden_->out);
      std::copy(hv.begin(), hv.end(), h_pre[b].v.begin());
    }
    std::vector<nn::Tensor2D> h_norm = h_pre;
    if (hidden_bn_) {
      hidden_cache = hidden_bn_->forward_train(h_norm, update_running_stats);
    }
    for (std::size_t b = 0; b < B; ++b) {
      h_relu[b] = h_norm[b].v;
      nn::relu_inplace(h_relu[b]);
      if (config_.dropout_p > 0.0) {
        mask[b] =
            nn::dropout_mask(h_relu[b].size(), config_.dropout_p, dropout_rng);
        head_in[b].resize(h_relu[b].size());
        for (std::size_t j = 0; j < mask[b].size(); ++j) {
          head_in[b][j] = h_relu[b][j] * mask[b][j];
        }
      } else {
        head_in[b] = h_relu[b];
      }
    }
  } else {
    head_in = pooled;
  }

  double loss = 0.0;
  std::vector<double> dz(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double z = out_.forward(head_in[b])[0];
    const double w = labels[b] > 0.5 ? positive_weight : 1.0;
    loss += w * nn::bce_loss_from_logit(z, labels[b]);
    dz[b] = w * nn::bce_dlogit(z, labels[b]) / static_cast<double>(B);
  }
  loss /= static_cast<double>(B);

  // ---- backward ----
  std::vector<double> d_embed_w, d_hidden_w, d_hidden_b, d_out_w, d_out_b;
  std::vector<double> d_hidden_gamma, d_hidden_beta;
  std::vector<std::vector<double>> d_conv_w(S), d_conv_b(S), d_gamma(S),
      d_beta(S);
  d_embed_w.assign(embed_.weight.size(), 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    d_conv_w[s].assign(convs_[s].weight.size(), 0.0);
    d_conv_b[s].assign(convs_[s].bias.size(), 0.0);
  }
  if (hidden_) {
    d_hidden_w.assign(hidden_->weight.size(), 0.0);
    d_hidden_b.assign(hidden_->bias.size(), 0.0);
  }
  d_out_w.assign(out_.weight.size(), 0.0);
  d_out_b.assign(out_.bias.size(), 0.0);

  std::vector<std::vector<double>> d_head(B), d_pooled(B);
  for (std::size_t b = 0; b < B; ++b) {
    out_.backward(head_in[b], std::span<const double>(&dz[b], 1), &d_head[b],
                  &d_out_w, &d_out_b);
  }

  if (hidden_) {
    std::vector<nn::Tensor2D> d_h_relu(B);
    for (std::size_t b = 0; b < B; ++b) {
      auto g = d_head[b];
      if (config_.dropout_p > 0.0) {
        for (std::size_t j = 0; j < g.size(); ++j) g[j] *= mask[b][j];
      }
      nn::relu_backward_inplace(h_relu[b], g);  // post-ReLU values as mask
      d_h_relu[b] = nn::Tensor2D(1, hidden_->out);
      std::copy(g.begin(), g.end(), d_h_relu[b].v.begin());
    }
    std::vector<std::vector<double>> d_h_pre(B);
    if (hidden_bn_) {
      std::vector<nn::Tensor2D> dx;
      hidden_bn_->backward(h_pre, hidden_cache, d_h_relu, &dx, &d_hidden_gamma,
                           &d_hidden_beta);
      for (std::size_t b = 0; b < B; ++b) d_h_pre[b] = dx[b].v;
    } else {
      for (std::size_t b = 0; b < B; ++b) d_h_pre[b] = d_h_relu[b].v;
    }
    for (std::size_t b = 0; b < B; ++b) {
      hidden_->backward(pooled[b], d_h_pre[b], &d_pooled[b], &d_hidden_w,
                        &d_hidden_b);
    }
  } else {
    d_pooled = d_head;
  }

  std::vector<nn::Tensor2D> d_act(B);
  for (std::size_t b = 0; b < B; ++b) {
    d_act[b] = nn::Tensor2D(act[S - 1][b].rows, act[S - 1][b].cols);
    nn::global_max_pool_backward(pools[b], d_pooled[b], d_act[b]);
  }

  for (std::size_t s = S; s-- > 0;) {
    for (std::size_t b = 0; b < B; ++b) {
      nn::relu_backward_inplace(act[s][b], d_act[b]);
    }
    std::vector<nn::Tensor2D>* d_conv = &d_act;
    std::vector<nn::Tensor2D> d_conv_storage;
    if (conv_bns_[s]) {
      conv_bns_[s]->backward(conv_out[s], bn_cache[s], d_act, &d_conv_storage,
                             &d_gamma[s], &d_beta[s]);
      d_conv = &d_conv_storage;
    }
    const std::vector<nn::Tensor2D>& input = s == 0 ? embedded : act[s - 1];
    std::vector<nn::Tensor2D> d_input(B);
    for (std::size_t b = 0; b < B; ++b) {
      convs_[s].backward(input[b], (*d_conv)[b], &d_input[b], &d_conv_w[s],
                         &d_conv_b[s]);
    }
    d_act = std::move(d_input);
  }
  for (std::size_t b = 0; b < B; ++b) {
    embed_.accumulate_grad(batch[b], d_act[b], d_embed_w);
  }

  // ---- assemble in trainable_blocks() order ----
  std::map<std::string, std::vector<double>*> by_name;
  by_name["embed.W"] = &d_embed_w;
  for (std::size_t s = 0; s < S; ++s) {
    const std::string prefix = "conv" + std::to_string(s);
    by_name[prefix + ".W"] = &d_conv_w[s];
    by_name[prefix + ".b"] = &d_conv_b[s];
    if (conv_bns_[s]) {
      by_name[prefix + ".bn.gamma"] = &d_gamma[s];
      by_name[prefix + ".bn.beta"] = &d_beta[s];
    }
  }
  if (hidden_) {
    by_name["hidden.W"] = &d_hidden_w;
    by_name["hidden.b"] = &d_hidden_b;
    if (hidden_bn_) {
      by_name["hidden.bn.gamma"] = &d_hidden_gamma;
      by_name["hidden.bn.beta"] = &d_hidden_beta;
    }
  }
  by_name["out.W"] = &d_out_w;
  by_name["out.b"] = &d_out_b;

  const auto refs = trainable_blocks();
  grads.resize(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    grads[i] = std::move(*by_name.at(refs[i].name));
  }
  return loss;
}

}  // namespace pdfscan::models
