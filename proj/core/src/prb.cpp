// SPDX-License-Identifier: Apache-2.0
#include "mind/prb.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mind/assets.hpp"
#include "mind/error.hpp"
#include "mind/protocol.hpp"
#include "mind/routing.hpp"

namespace mind::prb {

using json = nlohmann::json;

namespace {

constexpr std::string_view kUnclear = "not mentioned/unclear";
constexpr std::size_t kMaxChunks = 3;

bool hit_before(const RetrievalHit& a, const RetrievalHit& b) {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.entry_id < b.entry_id;
}

bool eligible(const PRBEntry& e, const RetrieveOptions& opts) {
  if (e.state_vec.zero) return false;
  return opts.include_flagged || !e.meta.any_hard_flag();
}

std::string section(std::string_view text, std::string_view header, std::string_view next_header) {
  const auto start = text.find(header);
  if (start == std::string_view::npos) return {};
  const auto body = start + header.size();
  const auto end = next_header.empty() ? std::string_view::npos : text.find(next_header, body);
  return std::string(protocol::trim(text.substr(body, end == std::string_view::npos ? end : end - body)));
}

}  // namespace

void validate_entry(const PRBEntry& entry, std::size_t dims) {
  auto fail = [&](const char* what) { throw Error(ErrorCode::InvalidEntry, entry.entry_id, what); };
  if (entry.entry_id.empty()) fail("empty entry_id");
  if (protocol::trim(entry.state_text).empty()) fail("empty state_text");
  if (protocol::trim(entry.support_text).empty()) fail("empty support_text");
  if (protocol::trim(entry.ref_inquiry).empty()) fail("empty ref_inquiry");
  if (entry.state_vec.dims() != dims) fail("state_vec dims mismatch");
  if (entry.meta.quality < 1 || entry.meta.quality > 5) fail("quality outside 1..5");
}

PrbIndex::PrbIndex(std::vector<PRBEntry> entries, std::size_t dims, std::string backend_fingerprint)
    : entries_(std::move(entries)), dims_(dims), fingerprint_(std::move(backend_fingerprint)) {
  std::set<std::string_view> ids;
  for (const auto& e : entries_) {
    validate_entry(e, dims_);
    if (!ids.insert(e.entry_id).second) throw Error(ErrorCode::InvalidEntry, e.entry_id, "duplicate entry_id");
  }
}

const PRBEntry* PrbIndex::find(std::string_view entry_id) const noexcept {
  for (const auto& e : entries_) {
    if (e.entry_id == entry_id) return &e;
  }
  return nullptr;
}

std::vector<RetrievalHit> retrieve(const PrbIndex& index, const EmbeddingVector& query, std::size_t k,
                                   RetrieveOptions opts) {
  if (k == 0) throw Error(ErrorCode::Config, "k", "must be >= 1");
  if (query.zero) throw Error(ErrorCode::ZeroVector, "query");
  std::vector<RetrievalHit> scored;
  scored.reserve(index.size());
  for (const auto& e : index.entries()) {
    if (!eligible(e, opts)) continue;
    scored.push_back({e.entry_id, cosine(query, e.state_vec), e.support_text, e.meta.quality});
  }
  if (scored.empty()) throw Error(ErrorCode::EmptyIndex);
  const auto top = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top), scored.end(), hit_before);
  scored.resize(top);
  return scored;
}

std::vector<RetrievalHit> retrieve(const PrbIndex& index, std::string_view query_text, std::size_t k,
                                   const Embedder& embed, RetrieveOptions opts) {
  return retrieve(index, embed.embed(query_text), k, opts);
}

const PRBEntry* nearest_entry(const PrbIndex& index, const EmbeddingVector& query, RetrieveOptions opts) {
  if (query.zero) return nullptr;
  const PRBEntry* best = nullptr;
  double best_sim = 0.0;
  for (const auto& e : index.entries()) {
    if (!eligible(e, opts)) continue;
    const double sim = cosine(query, e.state_vec);
    if (!best || sim > best_sim || (sim == best_sim && e.entry_id < best->entry_id)) {
      best = &e;
      best_sim = sim;
    }
  }
  return best;
}

double reliability_proxy(std::span<const RetrievalHit> hits, double alpha_sim, double alpha_qual) {
  if (hits.empty()) throw Error(ErrorCode::EmptyHits);
  double max_sim = hits.front().similarity;
  double quality_sum = 0.0;
  for (const auto& h : hits) {
    max_sim = std::max(max_sim, h.similarity);
    quality_sum += static_cast<double>(h.quality) / 5.0;
  }
  return alpha_sim * max_sim + alpha_qual * (quality_sum / static_cast<double>(hits.size()));
}

GateResult gate(std::span<const RetrievalHit> hits, double threshold) {
  GateResult out;
  if (hits.empty()) return out;
  double max_sim = hits.front().similarity;
  for (const auto& h : hits) max_sim = std::max(max_sim, h.similarity);
  out.inject = max_sim >= threshold;
  if (out.inject) {
    for (const auto& h : hits) out.supports.push_back(h.support_text);
  }
  return out;
}

QualityHistogram quality_histogram(std::span<const PRBMeta> metas) {
  QualityHistogram h;
  for (const auto& m : metas) {
    if (m.quality >= 1 && m.quality <= 5) ++h.counts[static_cast<std::size_t>(m.quality - 1)];
  }
  for (auto c : h.counts) h.total += c;
  if (h.total > 0) {
    for (std::size_t i = 0; i < 5; ++i) h.ratios[i] = static_cast<double>(h.counts[i]) / static_cast<double>(h.total);
  }
  return h;
}

QualityHistogram quality_histogram(const PrbIndex& index) {
  std::vector<PRBMeta> metas;
  metas.reserve(index.size());
  for (const auto& e : index.entries()) metas.push_back(e.meta);
  return quality_histogram(metas);
}

// ---- prompts ----------------------------------------------------------------

std::vector<ChatTurnMsg> state_prompt(std::string_view dialogue_context) {
  return {{Role::system, std::string(assets::state_prompt())}, {Role::user, std::string(dialogue_context)}};
}

std::vector<ChatTurnMsg> support_prompt(std::string_view dialogue_context, std::string_view state,
                                        std::span<const std::string> chunks, std::string_view next_question) {
  std::string refs;
  for (const auto& c : chunks) refs += "- " + c + "\n";
  if (refs.empty()) refs = "(none)\n";
  std::string user = "Dialogue:\n" + std::string(dialogue_context) + "\n\nState:\n" + std::string(state) +
                     "\n\nReferences:\n" + refs + "\nNext question:\n" + std::string(next_question);
  return {{Role::system, std::string(assets::support_prompt())}, {Role::user, std::move(user)}};
}

std::vector<ChatTurnMsg> reliability_prompt(std::string_view dialogue_context, std::string_view support_text) {
  std::string user = "Dialogue:\n" + std::string(dialogue_context) + "\n\nSupport:\n" + std::string(support_text);
  return {{Role::system, std::string(assets::reliability_prompt())}, {Role::user, std::move(user)}};
}

// ---- offline author -----------------------------------------------------------

std::string compress_state(std::string_view dialogue_context) {
  std::vector<std::string> sentences;
  std::string current;
  for (char c : dialogue_context) {
    if (c == '.' || c == '?' || c == '!' || c == '\n' || c == ';') {
      auto t = protocol::trim(current);
      if (!t.empty()) sentences.emplace_back(t);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (auto t = protocol::trim(current); !t.empty()) sentences.emplace_back(t);

  const auto& router = FieldRouter::builtin();
  std::string out;
  for (auto field : kAllFields) {
    std::string clause;
    for (const auto& s : sentences) {
      if (!router.mentions(s, field)) continue;
      // drop speaker prefixes such as "Patient:"
      std::string_view body = s;
      if (auto colon = body.find(':'); colon != std::string_view::npos && colon < 12) {
        body = protocol::trim(body.substr(colon + 1));
      }
      if (body.empty()) continue;
      if (!clause.empty()) clause += ", ";
      clause += body;
    }
    if (!out.empty()) out += "; ";
    out += std::string(field_phrase(field)) + ": " + (clause.empty() ? std::string(kUnclear) : clause);
  }
  return out;
}

std::optional<std::string> offline_author_reply(const std::vector<ChatTurnMsg>& messages) {
  if (messages.size() < 2) return std::nullopt;
  const auto id = assets::asset_id(messages.front().content);
  const std::string& user = messages.back().content;

  if (id == assets::asset_id(assets::state_prompt())) return compress_state(user);

  if (id == assets::asset_id(assets::support_prompt())) {
    const std::string state = section(user, "State:\n", "\n\nReferences:");
    const std::string refs = section(user, "References:\n", "\nNext question:");
    const std::string question = section(user, "Next question:\n", "");
    std::vector<std::string> known, gaps;
    std::istringstream clauses(state);
    std::string clause;
    while (std::getline(clauses, clause, ';')) {
      auto t = std::string(protocol::trim(clause));
      if (t.empty()) continue;
      if (t.find(kUnclear) != std::string::npos) {
        gaps.push_back(t.substr(0, t.find(':')));
      } else {
        known.push_back(t);
      }
    }
    std::string known_text = known.empty() ? "limited information" : known.front();
    for (std::size_t i = 1; i < std::min<std::size_t>(known.size(), 3); ++i) known_text += "; " + known[i];
    const std::string gap = gaps.empty() ? "the decisive detail" : gaps.front();
    std::string ref = "standard criteria checks";
    if (refs != "(none)" && refs.size() > 2) {
      ref = refs.substr(2, refs.find('\n') == std::string::npos ? std::string::npos : refs.find('\n') - 2);
      if (ref.size() > 160) ref = ref.substr(0, 160);
    }
    return "(Support) The patient reports " + known_text + ", but " + gap + " remains unclear. References suggest " +
           ref + ", so clarify " + gap + ". Asking \"" + question + "\" resolves this gap and guides the next step.";
  }

  if (id == assets::asset_id(assets::reliability_prompt())) {
    const std::string support = section(user, "Support:\n", "");
    int score = 3;
    if (support.find("References suggest standard criteria checks") == std::string::npos) {
      ++score;
    } else {
      --score;
    }
    std::size_t known_fields = 0;
    const std::string dialogue = section(user, "Dialogue:\n", "\n\nSupport:");
    known_fields = FieldRouter::builtin().route(dialogue).size();
    if (known_fields >= 3) ++score;
    score = std::clamp(score, 1, 5);
    bool asserts_label = false;
    for (auto label : kAllLabels) {
      const std::string padded = " " + std::string(to_string(label)) + " ";
      std::string spaced = " " + support + " ";
      for (char& c : spaced) {
        if (c == ',' || c == '.' || c == ';' || c == ':' || c == '"') c = ' ';
      }
      if (spaced.find(padded) != std::string::npos) asserts_label = true;
    }
    std::string reply = "(Score) " + std::to_string(score) + "/5. ";
    reply += asserts_label ? "(Hard issues) H1: NO, H2: YES, H3: NO." : "(Hard issues) H1-H3: NO.";
    reply += " (Rationale) rule-based offline assessment.";
    return reply;
  }
  return std::nullopt;
}

// ---- construction -------------------------------------------------------------

PRBMeta parse_reliability_reply(std::string_view reply) {
  PRBMeta quarantine;
  quarantine.quality = 1;
  quarantine.hard_flags = {true, true, true};
  quarantine.source_note = "quarantined: unparseable reliability reply";

  const std::string text(reply);
  static const std::regex score_re(R"(\(Score\)\s*([0-9]+)\s*/\s*5)");
  std::smatch m;
  if (!std::regex_search(text, m, score_re)) return quarantine;
  const int score = std::stoi(m[1].str());
  if (score < 1 || score > 5) return quarantine;

  const auto hard_pos = text.find("(Hard issues)");
  if (hard_pos == std::string::npos) return quarantine;
  auto hard_end = text.find("(Rationale)", hard_pos);
  const std::string hard = text.substr(hard_pos, hard_end == std::string::npos ? std::string::npos : hard_end - hard_pos);

  PRBMeta meta;
  meta.quality = score;
  static const std::regex all_re(R"(H1\s*-\s*H3\s*:\s*(YES|NO))", std::regex::icase);
  if (std::regex_search(hard, m, all_re)) {
    const bool yes = m[1].str().size() == 3;
    meta.hard_flags = {yes, yes, yes};
    return meta;
  }
  bool any = false;
  for (int i = 0; i < 3; ++i) {
    const std::regex one_re("H" + std::to_string(i + 1) + R"(\s*:\s*(YES|NO))", std::regex::icase);
    if (std::regex_search(hard, m, one_re)) {
      meta.hard_flags[static_cast<std::size_t>(i)] = m[1].str().size() == 3;
      any = true;
    }
  }
  return any ? meta : quarantine;
}

PRBMeta assess_reliability(std::string_view dialogue_context, std::string_view support_text, ChatClient& chat) {
  const auto reply = chat.chat(reliability_prompt(dialogue_context, support_text), GenParams::patient());
  return parse_reliability_reply(reply);
}

PRBEntry build_entry(const BuildInput& input, ChatClient& chat, const Embedder& embed) {
  if (protocol::trim(input.dialogue_context).empty()) {
    throw Error(ErrorCode::EmptyState, input.entry_id, "empty dialogue context");
  }
  const GenParams params = GenParams::patient();
  std::string state(protocol::trim(chat.chat(state_prompt(input.dialogue_context), params)));
  if (state.empty()) throw Error(ErrorCode::EmptyState, input.entry_id);
  EmbeddingVector state_vec = embed.embed(state);

  // keep the references closest to the state
  std::vector<std::string> chunks = input.knowledge_chunks;
  if (chunks.size() > kMaxChunks && !state_vec.zero) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const auto v = embed.embed(chunks[i]);
      ranked.emplace_back(v.zero ? -2.0 : cosine(state_vec, v), i);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < kMaxChunks; ++i) kept.push_back(chunks[ranked[i].second]);
    chunks = std::move(kept);
  }

  std::string support(
      protocol::trim(chat.chat(support_prompt(input.dialogue_context, state, chunks, input.next_question), params)));

  PRBEntry entry;
  entry.entry_id = input.entry_id;
  entry.state_text = std::move(state);
  entry.state_vec = std::move(state_vec);
  entry.support_text = std::move(support);
  entry.ref_inquiry = input.next_question;
  entry.meta = assess_reliability(input.dialogue_context, entry.support_text, chat);
  entry.meta.category = input.category;
  if (entry.meta.source_note.empty()) {
    entry.meta.source_note =
        chunks.empty() ? std::string("no references") : "references: " + std::to_string(chunks.size());
  }
  return entry;
}

PrbIndex build_bank(const std::vector<BuildInput>& inputs, ChatClient& chat, const Embedder& embed) {
  std::vector<PRBEntry> entries;
  entries.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    BuildInput in = inputs[i];
    if (in.entry_id.empty()) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "e%05zu", i);
      in.entry_id = buf;
    }
    entries.push_back(build_entry(in, chat, embed));
  }
  return PrbIndex(std::move(entries), embed.dims(), embed.fingerprint());
}

// ---- persistence --------------------------------------------------------------

namespace {

json entry_to_json(const PRBEntry& e) {
  return json{{"entry_id", e.entry_id},
              {"state_text", e.state_text},
              {"state_vec", e.state_vec.values},
              {"support_text", e.support_text},
              {"ref_inquiry", e.ref_inquiry},
              {"meta",
               {{"category", e.meta.category},
                {"quality", e.meta.quality},
                {"hard_flags", {e.meta.hard_flags[0], e.meta.hard_flags[1], e.meta.hard_flags[2]}},
                {"source_note", e.meta.source_note}}}};
}

PRBEntry entry_from_json(const json& j) {
  PRBEntry e;
  e.entry_id = j.at("entry_id").get<std::string>();
  e.state_text = j.at("state_text").get<std::string>();
  e.state_vec.values = j.at("state_vec").get<std::vector<double>>();
  e.state_vec.zero = std::all_of(e.state_vec.values.begin(), e.state_vec.values.end(), [](double v) { return v == 0.0; });
  e.support_text = j.at("support_text").get<std::string>();
  e.ref_inquiry = j.at("ref_inquiry").get<std::string>();
  const auto& m = j.at("meta");
  e.meta.category = m.at("category").get<std::string>();
  e.meta.quality = m.at("quality").get<int>();
  const auto flags = m.at("hard_flags").get<std::vector<bool>>();
  if (flags.size() != 3) throw Error(ErrorCode::InvalidEntry, e.entry_id, "hard_flags must have 3 values");
  e.meta.hard_flags = {flags[0], flags[1], flags[2]};
  e.meta.source_note = m.value("source_note", std::string{});
  return e;
}

}  // namespace

void save_index(const PrbIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, path, "cannot write index");
  out << json{{"schema", kSchema}, {"dims", index.dims()}, {"backend_fingerprint", index.backend_fingerprint()}}.dump()
      << '\n';
  for (const auto& e : index.entries()) out << entry_to_json(e).dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, path, "write failed");
}

PrbIndex load_index(const std::string& path, std::string_view expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path, "cannot open index");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, path, "missing header");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, path, std::string("bad header: ") + e.what());
  }
  const auto schema = header.value("schema", std::string{});
  if (schema != kSchema) throw Error(ErrorCode::SchemaVersionMismatch, schema, path);
  const auto fingerprint = header.value("backend_fingerprint", std::string{});
  if (!expected_fingerprint.empty() && fingerprint != expected_fingerprint) {
    throw Error(ErrorCode::BackendFingerprintMismatch, fingerprint, "expected " + std::string(expected_fingerprint));
  }
  const auto dims = header.value("dims", std::size_t{0});
  std::vector<PRBEntry> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      entries.push_back(entry_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Io, path + ":" + std::to_string(line_no), e.what());
    }
  }
  return PrbIndex(std::move(entries), dims, fingerprint);
}

}  // namespace mind::prb
