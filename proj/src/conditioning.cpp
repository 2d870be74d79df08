#include "mplab/conditioning.hpp"

#include <algorithm>

namespace mplab {

namespace {

constexpr double kInitScale = 0.02;

Matrix scaled_normal(Rng& rng, Index rows, Index cols) { return kInitScale * standard_normal(rng, rows, cols); }

}  // namespace

int Vocabulary::index_of(const std::string& word) const {
  auto it = std::find(words.begin(), words.end(), word);
  if (it == words.end()) throw std::invalid_argument("unknown word: " + word);
  return static_cast<int>(it - words.begin());
}

bool Vocabulary::contains(const std::string& word) const {
  return std::find(words.begin(), words.end(), word) != words.end();
}

std::string to_string(PlaceholderPosition pos) { return pos == PlaceholderPosition::Prefix ? "prefix" : "postfix"; }

PlaceholderPosition placeholder_position_from_string(const std::string& name) {
  if (name == "prefix") return PlaceholderPosition::Prefix;
  if (name == "postfix") return PlaceholderPosition::Postfix;
  throw std::invalid_argument("unknown placeholder position: " + name);
}

std::string to_string(InitMode mode) {
  switch (mode) {
    case InitMode::Default: return "default";
    case InitMode::Gaussian: return "gaussian";
    case InitMode::Word: return "word";
  }
  return "default";
}

InitMode init_mode_from_string(const std::string& name) {
  if (name == "default") return InitMode::Default;
  if (name == "gaussian") return InitMode::Gaussian;
  if (name == "word") return InitMode::Word;
  throw std::invalid_argument("unknown init mode: " + name);
}

TextEncoder::TextEncoder(const ToyWorld& world, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& c : world.conditions) vocab_.words.push_back(c.word);
  for (const auto& [word, ref] : world.attribute_words) vocab_.words.push_back(word);
  vocab_.words.push_back(kPlaceholderWord);
  vocab_.placeholder_row = vocab_.size() - 1;
  vocab_.table = scaled_normal(rng, vocab_.size(), kTokenDim);
  vocab_.null_embedding = scaled_normal(rng, kTokenDim, 1);
  positions_ = scaled_normal(rng, kMaxPromptLen, kTokenDim);
  leading_ = scaled_normal(rng, kMaxPromptLen, kTokenDim);
  slot_map_ = Mlp({kTokenDim, kSlotWidth, kSlotWidth}, true, rng);
  head_ = Mlp({kSlotWidth, kCondDim}, false, rng);
}

Prompt TextEncoder::base_prompt(int condition, const ToyWorld& world) const {
  return Prompt{{vocab_.index_of(world.condition(condition).word)}, 0, PlaceholderPosition::Postfix};
}

Matrix TextEncoder::slot_inputs(const Trace& trace, const LearnableToken* token) const {
  const Index n = static_cast<Index>(trace.slot_token.size());
  Matrix x(kTokenDim, n);
  for (Index i = 0; i < n; ++i) {
    const int tok = trace.slot_token[static_cast<std::size_t>(i)];
    const int pos = trace.slot_position[static_cast<std::size_t>(i)];
    if (tok >= 0) {
      x.col(i) = vocab_.table.row(tok).transpose();
    } else if (tok == -2) {
      x.col(i) = vocab_.null_embedding;
    } else {
      x.col(i) = token->v.row(trace.slot_placeholder[static_cast<std::size_t>(i)]).transpose();
    }
    x.col(i) += pos >= 0 ? positions_.row(pos).transpose() : leading_.row(-1 - pos).transpose();
  }
  return x;
}

CondEmbedding TextEncoder::run(Trace& trace, const LearnableToken* token) const {
  const Matrix x = slot_inputs(trace, token);
  const Matrix y = slot_map_.forward(x, &trace.slot_cache);
  const Matrix pooled = y.rowwise().mean();
  return head_.forward(pooled, &trace.head_cache).col(0);
}

CondEmbedding TextEncoder::encode(const Prompt& prompt, const LearnableToken* token, Trace* trace) const {
  if (prompt.length() > kMaxPromptLen) throw std::invalid_argument("prompt longer than L_max");
  if (prompt.length() == 0) throw std::invalid_argument("empty prompt");
  if (prompt.placeholders > 0) {
    if (!token) throw std::invalid_argument("prompt has placeholders but no learnable token was given");
    if (token->count() != prompt.placeholders || token->v.cols() != kTokenDim)
      throw std::invalid_argument("learnable token shape does not match the placeholder count");
  }
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr = Trace{};
  const int n = static_cast<int>(prompt.content.size());
  for (int k = 0; k < n; ++k) {
    const int tok = prompt.content[static_cast<std::size_t>(k)];
    if (tok < 0 || tok >= vocab_.size()) throw std::invalid_argument("prompt token outside vocabulary");
    tr.slot_token.push_back(tok);
    tr.slot_placeholder.push_back(-1);
    tr.slot_position.push_back(k);
  }
  for (int j = 0; j < prompt.placeholders; ++j) {
    tr.slot_token.push_back(-1);
    tr.slot_placeholder.push_back(j);
    tr.slot_position.push_back(prompt.position == PlaceholderPosition::Postfix ? n + j : -1 - j);
  }
  return run(tr, token);
}

CondEmbedding TextEncoder::encode_null(Trace* trace) const {
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr = Trace{};
  tr.slot_token.push_back(-2);
  tr.slot_placeholder.push_back(-1);
  tr.slot_position.push_back(0);
  return run(tr, nullptr);
}

Matrix TextEncoder::slot_input_grads(const Trace& trace, const CondEmbedding& grad_c, Grads* grads) const {
  const Matrix g_pooled = head_.backward(trace.head_cache, grad_c, grads ? &grads->head : nullptr);
  const Index n = static_cast<Index>(trace.slot_token.size());
  const Matrix g_y = g_pooled.replicate(1, n) / static_cast<double>(n);
  return slot_map_.backward(trace.slot_cache, g_y, grads ? &grads->slot_map : nullptr);
}

Matrix TextEncoder::vjp_token(const Trace& trace, const CondEmbedding& grad_c, int placeholders) const {
  const Matrix g_x = slot_input_grads(trace, grad_c, nullptr);
  Matrix out = Matrix::Zero(placeholders, kTokenDim);
  for (std::size_t i = 0; i < trace.slot_token.size(); ++i)
    if (trace.slot_token[i] == -1) out.row(trace.slot_placeholder[i]) += g_x.col(static_cast<Index>(i)).transpose();
  return out;
}

void TextEncoder::accumulate_param_grads(const Trace& trace, const CondEmbedding& grad_c, Grads& grads) const {
  const Matrix g_x = slot_input_grads(trace, grad_c, &grads);
  for (std::size_t i = 0; i < trace.slot_token.size(); ++i) {
    const Index col = static_cast<Index>(i);
    const int tok = trace.slot_token[i];
    const int pos = trace.slot_position[i];
    if (tok >= 0) grads.table.row(tok) += g_x.col(col).transpose();
    if (tok == -2) grads.null_embedding += g_x.col(col);
    if (pos >= 0)
      grads.positions.row(pos) += g_x.col(col).transpose();
    else
      grads.leading.row(-1 - pos) += g_x.col(col).transpose();
  }
}

TextEncoder::Grads TextEncoder::zero_grads() const {
  Grads g;
  g.table = Matrix::Zero(vocab_.table.rows(), vocab_.table.cols());
  g.positions = Matrix::Zero(positions_.rows(), positions_.cols());
  g.leading = Matrix::Zero(leading_.rows(), leading_.cols());
  g.null_embedding = Vector::Zero(vocab_.null_embedding.size());
  g.slot_map = slot_map_.zeros_like();
  g.head = head_.zeros_like();
  return g;
}

std::vector<ParamView> TextEncoder::params() {
  std::vector<ParamView> out{{vocab_.table.data(), vocab_.table.size()},
                             {positions_.data(), positions_.size()},
                             {leading_.data(), leading_.size()},
                             {vocab_.null_embedding.data(), vocab_.null_embedding.size()}};
  for (auto p : slot_map_.params()) out.push_back(p);
  for (auto p : head_.params()) out.push_back(p);
  return out;
}

std::vector<ParamView> TextEncoder::grad_views(Grads& g) {
  std::vector<ParamView> out{{g.table.data(), g.table.size()},
                             {g.positions.data(), g.positions.size()},
                             {g.leading.data(), g.leading.size()},
                             {g.null_embedding.data(), g.null_embedding.size()}};
  for (auto p : g.slot_map.params()) out.push_back(p);
  for (auto p : g.head.params()) out.push_back(p);
  return out;
}

LearnableToken init_token(const Vocabulary& vocab, InitMode mode, int m, std::uint64_t seed, const std::string& word) {
  if (m < 1) throw std::invalid_argument("init_token: m must be >= 1");
  LearnableToken tok;
  tok.init_mode = mode;
  tok.v.resize(m, vocab.embedding_dim());
  switch (mode) {
    case InitMode::Default:
      tok.v = vocab.table.row(vocab.placeholder_row).replicate(m, 1);
      break;
    case InitMode::Word: {
      const int row = vocab.index_of(word);
      tok.init_word = word;
      tok.v = vocab.table.row(row).replicate(m, 1);
      break;
    }
    case InitMode::Gaussian: {
      const Eigen::RowVectorXd mean = vocab.table.colwise().mean();
      const Eigen::RowVectorXd var = (vocab.table.rowwise() - mean).array().square().colwise().mean();
      Rng rng(seed);
      const Matrix z = standard_normal(rng, m, vocab.embedding_dim());
      tok.v = (z.array().rowwise() * var.array().sqrt()).rowwise() + mean.array();
      break;
    }
  }
  return tok;
}

CondEmbedding encode(const TextEncoder& enc, const Prompt& prompt, const LearnableToken* token) {
  return enc.encode(prompt, token);
}

CondEmbedding encode_null(const TextEncoder& enc) { return enc.encode_null(); }

}  // namespace mplab
