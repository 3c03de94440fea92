// SPDX-License-Identifier: Apache-2.0
//
// Reasoning bank: (retrieval state, support note, metadata) entries indexed
// by embedding, with exact top-k lookup, a reliability proxy for reward
// shaping and support gating.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mind/clients.hpp"
#include "mind/types.hpp"

namespace mind::prb {

inline constexpr std::string_view kSchema = "prb-v1";
inline constexpr std::string_view kGeneralCategory = "General";

struct PRBMeta {
  std::string category = std::string(kGeneralCategory);  // a DiagnosisLabel name or "General"
  int quality = 1;                                        // 1..5
  std::array<bool, 3> hard_flags{};                       // H1..H3
  std::string source_note;

  bool any_hard_flag() const noexcept { return hard_flags[0] || hard_flags[1] || hard_flags[2]; }
  friend bool operator==(const PRBMeta&, const PRBMeta&) = default;
};

struct PRBEntry {
  std::string entry_id;
  std::string state_text;
  EmbeddingVector state_vec;
  std::string support_text;
  std::string ref_inquiry;
  PRBMeta meta;

  friend bool operator==(const PRBEntry&, const PRBEntry&) = default;
};

/// Error{InvalidEntry} naming the entry when an invariant fails.
void validate_entry(const PRBEntry& entry, std::size_t dims);

/// Immutable after construction; safe for concurrent lookups.
class PrbIndex {
 public:
  PrbIndex() = default;
  PrbIndex(std::vector<PRBEntry> entries, std::size_t dims, std::string backend_fingerprint);

  const std::vector<PRBEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t dims() const noexcept { return dims_; }
  const std::string& backend_fingerprint() const noexcept { return fingerprint_; }
  const PRBEntry* find(std::string_view entry_id) const noexcept;

  friend bool operator==(const PrbIndex&, const PrbIndex&) = default;

 private:
  std::vector<PRBEntry> entries_;
  std::size_t dims_ = 0;
  std::string fingerprint_;
};

struct RetrievalHit {
  std::string entry_id;
  double similarity = 0.0;
  std::string support_text;
  int quality = 1;

  friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

struct RetrieveOptions {
  bool include_flagged = false;
};

/// Exact top-k by cosine, similarity descending then entry_id ascending.
/// Error{EmptyIndex} when nothing is eligible, Error{ZeroVector} for a
/// query that embeds to the zero vector.
std::vector<RetrievalHit> retrieve(const PrbIndex& index, std::string_view query_text, std::size_t k,
                                   const Embedder& embed, RetrieveOptions opts = {});
std::vector<RetrievalHit> retrieve(const PrbIndex& index, const EmbeddingVector& query, std::size_t k,
                                   RetrieveOptions opts = {});

/// Nearest eligible entry (argmax cosine, same tie-break); nullptr if none.
const PRBEntry* nearest_entry(const PrbIndex& index, const EmbeddingVector& query,
                              RetrieveOptions opts = {});

/// rho = a_sim * max similarity + a_qual * mean(quality / 5). Error{EmptyHits}.
double reliability_proxy(std::span<const RetrievalHit> hits, double alpha_sim, double alpha_qual);

struct GateResult {
  bool inject = false;
  std::vector<std::string> supports;
};

/// Injects when max similarity >= threshold (closed boundary).
GateResult gate(std::span<const RetrievalHit> hits, double threshold);

struct QualityHistogram {
  std::array<std::size_t, 5> counts{};
  std::array<double, 5> ratios{};
  std::size_t total = 0;
};

QualityHistogram quality_histogram(std::span<const PRBMeta> metas);
QualityHistogram quality_histogram(const PrbIndex& index);

// ---- construction ---------------------------------------------------------

/// Parses a reliability judge reply `(Score) n/5. (Hard issues) H1-H3: NO ...`.
/// Anything unparseable is quarantined: quality 1, all flags set.
PRBMeta parse_reliability_reply(std::string_view reply);

PRBMeta assess_reliability(std::string_view dialogue_context, std::string_view support_text,
                           ChatClient& chat);

struct BuildInput {
  std::string entry_id;
  std::string dialogue_context;
  std::vector<std::string> knowledge_chunks;
  std::string next_question;
  std::string category = std::string(kGeneralCategory);
};

/// Compresses the context into a retrieval state, synthesizes the support
/// note, embeds the state and scores reliability. Error{EmptyState}.
PRBEntry build_entry(const BuildInput& input, ChatClient& chat, const Embedder& embed);

/// Builds one entry per input; ids default to "e%05d" when blank. Ids must be unique.
PrbIndex build_bank(const std::vector<BuildInput>& inputs, ChatClient& chat, const Embedder& embed);

// Prompt assets (stable strings, also used by the offline author).
std::vector<ChatTurnMsg> state_prompt(std::string_view dialogue_context);
std::vector<ChatTurnMsg> support_prompt(std::string_view dialogue_context, std::string_view state,
                                        std::span<const std::string> chunks, std::string_view next_question);
std::vector<ChatTurnMsg> reliability_prompt(std::string_view dialogue_context, std::string_view support_text);

/// Offline stand-in for the bank author/judge roles: answers the three bank
/// prompts with deterministic rule-based text. Returns nullopt for other prompts.
std::optional<std::string> offline_author_reply(const std::vector<ChatTurnMsg>& messages);

/// Extracts a fact-only state from free text: one clause per cue field, with
/// "not mentioned/unclear" for fields the text never touches.
std::string compress_state(std::string_view dialogue_context);

// ---- persistence ----------------------------------------------------------

void save_index(const PrbIndex& index, const std::string& path);
/// Error{Io | SchemaVersionMismatch | BackendFingerprintMismatch | InvalidEntry}.
PrbIndex load_index(const std::string& path, std::string_view expected_fingerprint);

}  // namespace mind::prb
