// Copyright (c) 2026 the spawnnet authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON bindings for the config and record types (nlohmann::json ADL hooks).

#pragma once

#include <json.hpp>

#include "spawnnet/backbone.hpp"
#include "spawnnet/bench.hpp"
#include "spawnnet/imitation.hpp"
#include "spawnnet/policy.hpp"

namespace spawnnet {

void to_json(nlohmann::json& j, const Rect& r);
void from_json(const nlohmann::json& j, Rect& r);

void to_json(nlohmann::json& j, const PoseRange& p);
void from_json(const nlohmann::json& j, PoseRange& p);

void to_json(nlohmann::json& j, const InstanceSpec& s);
void from_json(const nlohmann::json& j, InstanceSpec& s);

void to_json(nlohmann::json& j, const CategoryConfig& c);
void from_json(const nlohmann::json& j, CategoryConfig& c);

void to_json(nlohmann::json& j, const BackboneSpec& s);
void from_json(const nlohmann::json& j, BackboneSpec& s);

void to_json(nlohmann::json& j, const AdapterSpec& a);
void from_json(const nlohmann::json& j, AdapterSpec& a);

void to_json(nlohmann::json& j, const ControlStreamSpec& c);
void from_json(const nlohmann::json& j, ControlStreamSpec& c);

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

void to_json(nlohmann::json& j, const PolicySpec& s);
void from_json(const nlohmann::json& j, PolicySpec& s);

void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

void to_json(nlohmann::json& j, const ActionVector& a);
void from_json(const nlohmann::json& j, ActionVector& a);

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

/// Canonical dump (sorted keys, fixed spacing) used for config hashing.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace spawnnet
