#pragma once

#include <cstddef>
#include <vector>

#include "rtb/core/rng.hpp"
#include "rtb/core/tensor.hpp"

namespace rtb {

// One categorical field inside a concatenated feature vector. One-hot fields
// relax to a per-field softmax; multi-hot fields (independent binary tags)
// relax each bit to a binary concrete (Gumbel-sigmoid) variable.
struct FieldBlock {
  std::size_t offset = 0;
  std::size_t width = 0;
  bool multi_hot = false;

  friend bool operator==(const FieldBlock&, const FieldBlock&) = default;
};

using FieldLayout = std::vector<FieldBlock>;

std::size_t layout_width(const FieldLayout& layout);

// Standard Gumbel noise on one-hot blocks, standard logistic noise on
// multi-hot bits (the difference of two Gumbels). Shape (batch, width).
Tensor sample_relaxation_noise(std::size_t batch, const FieldLayout& layout, Rng& rng);

// Relaxed sample: softmax((logits + g) / tau) per one-hot field. Because
// log-softmax only shifts logits by a per-field constant, feeding raw logits
// equals feeding log-probabilities. Throws when tau <= 0.
Tensor gumbel_softmax(const Tensor& logits, const FieldLayout& layout, double tau,
                      const Tensor& noise);

// Vector-Jacobian product of gumbel_softmax with respect to the logits, given
// the relaxed output it produced.
Tensor gumbel_softmax_backward(const Tensor& relaxed, const FieldLayout& layout, double tau,
                               const Tensor& grad_output);

// Per-field argmax (one-hot blocks) and threshold at 1/2 (multi-hot bits).
Tensor harden(const Tensor& relaxed, const FieldLayout& layout);

}  // namespace rtb
