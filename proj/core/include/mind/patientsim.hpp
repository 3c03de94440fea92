// SPDX-License-Identifier: Apache-2.0
//
// Profile-driven patient simulators. Std answers with canonical templates;
// Adapt varies wording with a seeded template choice and hedges. Both share
// one fact path, so statuses never differ between modes.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mind/hash.hpp"
#include "mind/routing.hpp"
#include "mind/types.hpp"

namespace mind {

struct SimMemory {
  struct Entry {
    CueStatus status = CueStatus::unknown;
    std::string phrasing;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  /// Keyed by cue id, or "field:<name>" for fields without a profile cue.
  std::map<std::string, Entry> asserted;
  std::set<std::string> inferred;

  friend bool operator==(const SimMemory&, const SimMemory&) = default;
};

struct SimMode {
  enum class Kind { Std, Adapt };
  Kind kind = Kind::Std;
  std::uint64_t seed = 0;

  static SimMode std_mode() { return {}; }
  static SimMode adapt(std::uint64_t seed) { return {Kind::Adapt, seed}; }
};

class PriorTable {
 public:
  /// The shipped priors-v1 table.
  static const PriorTable& builtin();
  /// Error{Parse | UnknownField | UnknownLabel | MissingPrior (table not total)}.
  static PriorTable parse(std::string_view jsonl);

  /// Error{MissingPrior}.
  CueStatus lookup(DiagnosisLabel label, CueField field) const;
  void set(DiagnosisLabel label, CueField field, CueStatus status);
  bool total() const noexcept;

 private:
  std::array<std::array<std::optional<CueStatus>, kAllFields.size()>, kAllLabels.size()> table_{};
};

/// Looks the prior up and records it in memory. A memory hit returns the stored
/// status without a new inference.
CueStatus weak_infer(CueField field, DiagnosisLabel label, const PriorTable& priors, SimMemory& memory,
                     const std::string& key);

std::string memory_key(CueField field);

struct SimFact {
  std::string key;
  CueField field = CueField::complaint;
  CueStatus status = CueStatus::unknown;
  friend bool operator==(const SimFact&, const SimFact&) = default;
};

struct SimReply {
  std::string utterance;
  std::set<std::string> revealed;
  std::vector<SimFact> facts;
  std::vector<CueField> routed;
};

/// One simulator per episode; not thread-safe.
class PatientSimulator {
 public:
  PatientSimulator(CaseProfile profile, SimMode mode, const PriorTable& priors = PriorTable::builtin(),
                   const FieldRouter& router = FieldRouter::builtin());

  /// Presents the explicit cues and commits them to memory.
  SimReply opening();
  /// Error{Config} on an empty question.
  SimReply respond(std::string_view question);

  const SimMemory& memory() const noexcept { return memory_; }
  const CaseProfile& profile() const noexcept { return profile_; }
  const SimMode& mode() const noexcept { return mode_; }

 private:
  std::string phrase(const SimFact& fact, const CueItem* cue, bool inferred);

  CaseProfile profile_;
  SimMode mode_;
  const PriorTable& priors_;
  const FieldRouter& router_;
  SimMemory memory_;
  Rng rng_;
};

struct TranscriptTurn {
  std::string question;
  std::string utterance;
  std::set<std::string> revealed;
  std::vector<SimFact> facts;
};

struct ConsistencyReport {
  std::size_t fc_violations = 0;
  double completeness = 1.0;
  std::size_t overshare = 0;
};

/// fc_violations: status changes of a key between turns. completeness: share
/// of routable questions whose fields were all answered. overshare: revealed
/// cue ids whose field the question did not route to.
ConsistencyReport audit_consistency(const std::vector<TranscriptTurn>& transcript, const CaseProfile& profile,
                                    const FieldRouter& router = FieldRouter::builtin());

}  // namespace mind
