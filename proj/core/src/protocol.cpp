// SPDX-License-Identifier: Apache-2.0
#include "mind/protocol.hpp"

#include <algorithm>
#include <array>

namespace mind::protocol {

std::string_view to_string(Tag tag) noexcept {
  switch (tag) {
    case Tag::think: return "think";
    case Tag::rag_query: return "rag_query";
    case Tag::answer: return "answer";
  }
  return "think";
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::MissingTag: return "MissingTag";
    case ViolationKind::UnclosedTag: return "UnclosedTag";
    case ViolationKind::DuplicateTag: return "DuplicateTag";
    case ViolationKind::EmptySegment: return "EmptySegment";
    case ViolationKind::TrailingGarbage: return "TrailingGarbage";
    case ViolationKind::UnknownLabel: return "UnknownLabel";
  }
  return "MissingTag";
}

std::string_view trim(std::string_view text) noexcept {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

namespace {

struct TagToken {
  Tag tag;
  bool closing;
  std::size_t begin;
  std::size_t end;
};

struct Span {
  Tag tag;
  std::size_t open;           // offset of the opening tag
  std::size_t content_begin;  // first byte after the opening tag
  std::size_t content_end;    // offset of the closing tag
  std::string_view content;
};

constexpr std::array<std::pair<std::string_view, std::pair<Tag, bool>>, 6> kTagTable = {{
    {kThinkOpen, {Tag::think, false}},
    {kThinkClose, {Tag::think, true}},
    {kQueryOpen, {Tag::rag_query, false}},
    {kQueryClose, {Tag::rag_query, true}},
    {kAnswerOpen, {Tag::answer, false}},
    {kAnswerClose, {Tag::answer, true}},
}};

std::vector<TagToken> tokenize(std::string_view raw) {
  std::vector<TagToken> tokens;
  for (std::size_t pos = raw.find('<'); pos != std::string_view::npos; pos = raw.find('<', pos)) {
    bool matched = false;
    for (const auto& [literal, meta] : kTagTable) {
      if (raw.substr(pos, literal.size()) == literal) {
        tokens.push_back({meta.first, meta.second, pos, pos + literal.size()});
        pos += literal.size();
        matched = true;
        break;
      }
    }
    if (!matched) ++pos;
  }
  return tokens;
}

struct Scan {
  std::vector<Span> spans;
  std::vector<FormatViolation> violations;
  std::vector<Tag> unclosed;  // tags reported as UnclosedTag
};

void report_stray_text(std::string_view raw, std::size_t from, std::size_t to, Scan& scan) {
  if (from >= to) return;
  const auto text = raw.substr(from, to - from);
  const auto first = text.find_first_not_of(" \t\r\n\f\v");
  if (first != std::string_view::npos) {
    scan.violations.push_back({ViolationKind::TrailingGarbage, from + first, "text outside blocks"});
  }
}

Scan scan_spans(std::string_view raw) {
  Scan scan;
  struct Pending {
    Tag tag;
    std::size_t open;
    std::size_t content_begin;
  };
  std::optional<Pending> pending;
  std::size_t outside_from = 0;  // start of text not covered by any block

  auto mark_unclosed = [&](const Pending& p) {
    scan.violations.push_back({ViolationKind::UnclosedTag, p.open, std::string(to_string(p.tag))});
    scan.unclosed.push_back(p.tag);
  };

  for (const auto& tok : tokenize(raw)) {
    if (!tok.closing) {
      if (pending) {
        mark_unclosed(*pending);
      } else {
        report_stray_text(raw, outside_from, tok.begin, scan);
      }
      pending = Pending{tok.tag, tok.begin, tok.end};
      continue;
    }
    if (pending && pending->tag == tok.tag) {
      scan.spans.push_back({tok.tag, pending->open, pending->content_begin, tok.begin,
                            raw.substr(pending->content_begin, tok.begin - pending->content_begin)});
      pending.reset();
    } else {
      if (pending) {
        mark_unclosed(*pending);
        pending.reset();
      } else {
        report_stray_text(raw, outside_from, tok.begin, scan);
      }
      scan.violations.push_back(
          {ViolationKind::MissingTag, tok.begin, "opening " + std::string(to_string(tok.tag))});
    }
    outside_from = tok.end;
  }
  if (pending) {
    mark_unclosed(*pending);
  } else {
    report_stray_text(raw, outside_from, raw.size(), scan);
  }
  return scan;
}

const Span* first_span(const Scan& scan, Tag tag) {
  for (const auto& s : scan.spans) {
    if (s.tag == tag) return &s;
  }
  return nullptr;
}

bool was_unclosed(const Scan& scan, Tag tag) {
  return std::find(scan.unclosed.begin(), scan.unclosed.end(), tag) != scan.unclosed.end();
}

// Shared structural checks: duplicates, foreign blocks, missing required
// blocks, empty required blocks and ordering of the leading think block.
void check_structure(std::string_view raw, Scan& scan, Tag primary, bool think_required) {
  auto allowed = [&](Tag t) { return t == Tag::think || t == primary; };
  std::array<int, 3> seen{};
  for (const auto& s : scan.spans) {
    if (!allowed(s.tag)) {
      scan.violations.push_back(
          {ViolationKind::TrailingGarbage, s.open, "unexpected " + std::string(to_string(s.tag))});
      continue;
    }
    if (++seen[static_cast<std::size_t>(s.tag)] > 1) {
      scan.violations.push_back({ViolationKind::DuplicateTag, s.open, std::string(to_string(s.tag))});
    }
  }

  const Span* main = first_span(scan, primary);
  const Span* think = first_span(scan, Tag::think);
  if (!main && !was_unclosed(scan, primary)) {
    scan.violations.push_back({ViolationKind::MissingTag, raw.size(), std::string(to_string(primary))});
  }
  if (think_required && !think && !was_unclosed(scan, Tag::think)) {
    scan.violations.push_back({ViolationKind::MissingTag, raw.size(), "think"});
  }
  if (main && trim(main->content).empty()) {
    scan.violations.push_back({ViolationKind::EmptySegment, main->content_begin, std::string(to_string(primary))});
  }
  if (think && trim(think->content).empty()) {
    scan.violations.push_back({ViolationKind::EmptySegment, think->content_begin, "think"});
  }
  if (think && main && think->open > main->open) {
    scan.violations.push_back({ViolationKind::TrailingGarbage, think->open, "think after " + std::string(to_string(primary))});
  }
}

void sort_violations(std::vector<FormatViolation>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const FormatViolation& a, const FormatViolation& b) { return a.location < b.location; });
}

}  // namespace

std::optional<Action> classify_answer(std::string_view body) {
  const auto text = trim(body);
  if (!text.starts_with(kDiagnosisMarker)) return Action{Inquiry{std::string(text)}};
  auto rest = trim(text.substr(kDiagnosisMarker.size()));
  const auto token_end = rest.find_first_of(" \t\r\n\f\v<");
  const auto token = rest.substr(0, token_end);
  const auto label = parse_label(token);
  if (!label) return std::nullopt;
  auto remainder = token_end == std::string_view::npos ? std::string_view{} : trim(rest.substr(token_end));
  if (remainder.starts_with(kRecommendationMarker)) {
    remainder = trim(remainder.substr(kRecommendationMarker.size()));
  }
  return Action{Diagnose{*label, std::string(remainder)}};
}

ParseResult<Stage1Output> parse_stage1(std::string_view raw) {
  Scan scan = scan_spans(raw);
  check_structure(raw, scan, Tag::rag_query, false);
  ParseResult<Stage1Output> result;
  const Span* query = first_span(scan, Tag::rag_query);
  if (query && !trim(query->content).empty()) {
    Stage1Output out;
    out.rag_query = std::string(trim(query->content));
    const Span* think = first_span(scan, Tag::think);
    if (think && think->open < query->open && !trim(think->content).empty()) {
      out.think = std::string(trim(think->content));
    }
    result.value = std::move(out);
  }
  sort_violations(scan.violations);
  result.violations = std::move(scan.violations);
  return result;
}

ParseResult<Stage2Output> parse_stage2(std::string_view raw) {
  Scan scan = scan_spans(raw);
  check_structure(raw, scan, Tag::answer, true);
  ParseResult<Stage2Output> result;
  const Span* think = first_span(scan, Tag::think);
  const Span* answer = first_span(scan, Tag::answer);
  if (answer && !trim(answer->content).empty()) {
    auto action = classify_answer(answer->content);
    if (!action) {
      const auto body = trim(answer->content);
      auto rest = trim(body.substr(kDiagnosisMarker.size()));
      scan.violations.push_back({ViolationKind::UnknownLabel, answer->content_begin,
                                 std::string(rest.substr(0, rest.find_first_of(" \t\r\n<")))});
    } else if (think && !trim(think->content).empty()) {
      result.value = Stage2Output{std::string(trim(think->content)), std::move(*action)};
    }
  }
  sort_violations(scan.violations);
  result.violations = std::move(scan.violations);
  return result;
}

std::vector<FormatViolation> check_compliance(std::string_view raw, int stage) {
  return stage == 1 ? parse_stage1(raw).violations : parse_stage2(raw).violations;
}

std::string render(const Stage1Output& out) {
  std::string text;
  if (out.think) {
    text.append(kThinkOpen).append(*out.think).append(kThinkClose);
  }
  text.append(kQueryOpen).append(out.rag_query).append(kQueryClose);
  return text;
}

std::string render_answer(const Action& action) {
  if (const auto* q = std::get_if<Inquiry>(&action)) return q->question;
  const auto& d = std::get<Diagnose>(action);
  std::string body(kDiagnosisMarker);
  body.append(" ").append(to_string(d.label));
  if (!d.recommendation.empty()) {
    body.append(" ").append(kRecommendationMarker).append(" ").append(d.recommendation);
  }
  return body;
}

std::string render(const Stage2Output& out) {
  std::string text;
  text.append(kThinkOpen).append(out.think).append(kThinkClose);
  text.append(kAnswerOpen).append(render_answer(out.action)).append(kAnswerClose);
  return text;
}

}  // namespace mind::protocol
