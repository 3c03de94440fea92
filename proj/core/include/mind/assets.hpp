// SPDX-License-Identifier: Apache-2.0
//
// Versioned text assets compiled into the library (prompts/, assets/).
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace mind::assets {

std::string_view state_prompt();
std::string_view support_prompt();
std::string_view reliability_prompt();
std::string_view rubric_prompt();
std::string_view faithfulness_prompt();
std::string_view policy_stage1_prompt();
std::string_view policy_stage2_prompt();
std::string_view routing_table();
std::string_view prior_table();

/// Replaces every `{{key}}` with its value.
std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> values);

/// First line of an asset, e.g. "[mind:rubric-v1]".
std::string_view asset_id(std::string_view asset);

}  // namespace mind::assets
