#pragma once

#include "asiplab/types.hpp"

#include <optional>
#include <utility>

namespace asiplab {

enum class EnvelopeKind {
  GradientDelta,    // one vector: summed raw gradients
  PrimalDualDelta,  // two vectors: primal delta and dual delta
  DualDelta,        // one vector: change in the dual iterate
  FinalModel,       // one vector: a worker's finished model
};

// One broadcast message. Envelopes are copied to each receiver; a payload
// is never shared mutably between workers.
struct AsipEnvelope {
  int sender = 0;
  EnvelopeKind kind = EnvelopeKind::GradientDelta;
  ModelVector primary;
  std::optional<ModelVector> secondary;

  // PrimalDualDelta carries exactly two payload vectors, every other kind
  // exactly one.
  bool payload_matches_kind() const {
    return (kind == EnvelopeKind::PrimalDualDelta) == secondary.has_value();
  }
};

inline AsipEnvelope make_gradient_delta(int sender, ModelVector g) {
  return {sender, EnvelopeKind::GradientDelta, std::move(g), std::nullopt};
}

inline AsipEnvelope make_dual_delta(int sender, ModelVector d) {
  return {sender, EnvelopeKind::DualDelta, std::move(d), std::nullopt};
}

inline AsipEnvelope make_primal_dual_delta(int sender, ModelVector dw,
                                           ModelVector dmu) {
  return {sender, EnvelopeKind::PrimalDualDelta, std::move(dw),
          std::move(dmu)};
}

inline AsipEnvelope make_final_model(int sender, ModelVector w) {
  return {sender, EnvelopeKind::FinalModel, std::move(w), std::nullopt};
}

}  // namespace asiplab
