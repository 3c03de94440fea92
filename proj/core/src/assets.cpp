// SPDX-License-Identifier: Apache-2.0
#include "mind/assets.hpp"

#include "mind/assets_data.hpp"

namespace mind::assets {

std::string_view state_prompt() { return data::state_v1_txt; }
std::string_view support_prompt() { return data::support_v1_txt; }
std::string_view reliability_prompt() { return data::reliability_v1_txt; }
std::string_view rubric_prompt() { return data::rubric_v1_txt; }
std::string_view faithfulness_prompt() { return data::faithfulness_v1_txt; }
std::string_view policy_stage1_prompt() { return data::policy_stage1_v1_txt; }
std::string_view policy_stage2_prompt() { return data::policy_stage2_v1_txt; }
std::string_view routing_table() { return data::routing_v1_jsonl; }
std::string_view prior_table() { return data::priors_v1_jsonl; }

std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
  std::string out(tmpl);
  for (const auto& [key, value] : values) {
    const std::string needle = "{{" + std::string(key) + "}}";
    for (auto pos = out.find(needle); pos != std::string::npos; pos = out.find(needle, pos + value.size())) {
      out.replace(pos, needle.size(), value);
    }
  }
  return out;
}

std::string_view asset_id(std::string_view asset) { return asset.substr(0, asset.find('\n')); }

}  // namespace mind::assets
