#pragma once

#include "mplab/mlp.hpp"
#include "mplab/types.hpp"
#include "mplab/world.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mplab {

inline constexpr int kTokenDim = 16;     // e
inline constexpr int kCondDim = 32;      // c_e
inline constexpr int kMaxPromptLen = 8;  // L_max
inline constexpr int kSlotWidth = 64;
inline const std::string kPlaceholderWord = "<S>";

struct Vocabulary {
  std::vector<std::string> words;
  Matrix table;            // one row per word (rows = words.size(), cols = e)
  Vector null_embedding;   // e
  int placeholder_row = -1;

  int size() const { return static_cast<int>(words.size()); }
  int embedding_dim() const { return static_cast<int>(table.cols()); }
  // Row index of a word; throws std::invalid_argument for unknown words.
  int index_of(const std::string& word) const;
  bool contains(const std::string& word) const;
};

enum class PlaceholderPosition { Prefix, Postfix };
std::string to_string(PlaceholderPosition pos);
PlaceholderPosition placeholder_position_from_string(const std::string& name);

struct Prompt {
  std::vector<int> content;   // word rows of the base prompt P
  int placeholders = 0;       // m
  PlaceholderPosition position = PlaceholderPosition::Postfix;

  int length() const { return static_cast<int>(content.size()) + placeholders; }
  // P without the placeholder string.
  Prompt base() const { return Prompt{content, 0, position}; }
};

enum class InitMode { Default, Gaussian, Word };
std::string to_string(InitMode mode);
InitMode init_mode_from_string(const std::string& name);

struct LearnableToken {
  Matrix v;   // m x e
  InitMode init_mode = InitMode::Default;
  std::string init_word;

  int count() const { return static_cast<int>(v.rows()); }
};

using CondEmbedding = Vector;

// Token embeddings, learned positions, a per-slot feed-forward map, mean
// pooling and a linear head. Order sensitivity comes only from positions.
class TextEncoder {
public:
  // Cached activations of one encode() call, for back-propagation.
  struct Trace {
    std::vector<int> slot_token;   // row index, -1 = placeholder slot j (see slot_placeholder), -2 = null
    std::vector<int> slot_placeholder;
    std::vector<int> slot_position;  // >= 0: positional row, < 0: leading row (-1 - j)
    Mlp::Cache slot_cache;
    Mlp::Cache head_cache;
  };

  // Parameter gradients with the same layout as the encoder.
  struct Grads {
    Matrix table, positions, leading;
    Vector null_embedding;
    Mlp slot_map, head;
  };

  TextEncoder() = default;
  // Random initialization; the vocabulary holds one word per condition, one
  // per attribute word, and the reserved placeholder row.
  TextEncoder(const ToyWorld& world, std::uint64_t seed);

  Vocabulary& vocab() { return vocab_; }
  const Vocabulary& vocab() const { return vocab_; }

  CondEmbedding encode(const Prompt& prompt, const LearnableToken* token, Trace* trace = nullptr) const;
  CondEmbedding encode_null(Trace* trace = nullptr) const;

  // Vector-Jacobian product of encode(): the gradient of <grad_c, C> with
  // respect to the placeholder rows (m x e).
  Matrix vjp_token(const Trace& trace, const CondEmbedding& grad_c, int placeholders) const;
  // Accumulates parameter gradients of <grad_c, C> into `grads`.
  void accumulate_param_grads(const Trace& trace, const CondEmbedding& grad_c, Grads& grads) const;

  Grads zero_grads() const;
  std::vector<ParamView> params();
  static std::vector<ParamView> grad_views(Grads& g);

  Prompt base_prompt(int condition, const ToyWorld& world) const;

  // Raw parameter access for persistence.
  Matrix& positions() { return positions_; }
  Matrix& leading_positions() { return leading_; }
  Mlp& slot_map() { return slot_map_; }
  Mlp& head() { return head_; }
  const Matrix& positions() const { return positions_; }
  const Matrix& leading_positions() const { return leading_; }
  const Mlp& slot_map() const { return slot_map_; }
  const Mlp& head() const { return head_; }

private:
  Matrix slot_inputs(const Trace& trace, const LearnableToken* token) const;
  CondEmbedding run(Trace& trace, const LearnableToken* token) const;
  Matrix slot_input_grads(const Trace& trace, const CondEmbedding& grad_c, Grads* grads) const;

  Vocabulary vocab_;
  Matrix positions_;   // L_max x e
  Matrix leading_;     // L_max x e, positions of prefix placeholders
  Mlp slot_map_;       // e -> 64 -> 64, SiLU on both layers
  Mlp head_;           // 64 -> c_e, linear
};

// Initial value of the learnable token.
//  default:  the reserved placeholder row,
//  gaussian: draws from N(mean, var) of the embedding table per coordinate,
//  word:     copies of the named word's row.
LearnableToken init_token(const Vocabulary& vocab, InitMode mode, int m, std::uint64_t seed,
                          const std::string& word = "");

CondEmbedding encode(const TextEncoder& enc, const Prompt& prompt, const LearnableToken* token);
CondEmbedding encode_null(const TextEncoder& enc);

}  // namespace mplab
