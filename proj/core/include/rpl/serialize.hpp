#pragma once

#include "rpl/guarantees.hpp"
#include "rpl/kernels.hpp"
#include "rpl/loss.hpp"
#include "rpl/retrieval.hpp"
#include "rpl/trainer.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <vector>

// JSON views of configurations and reports. Readers accept partial objects
// (absent keys keep their defaults) and throw ConfigError on unknown keys or
// wrong types. Timing fields are left out so that reruns produce identical
// files.
namespace rpl::io {

using Json = nlohmann::ordered_json;

Json to_json(const kernels::RelationshipConfig& cfg);
Json to_json(const loss::LossConfig& cfg);
Json to_json(const train::TrainConfig& cfg);
Json to_json(const audit::AuditConfig& cfg);
Json to_json(const train::TrainReport& report);
Json to_json(const audit::BoundReport& report);
Json to_json(const retrieval::RetrievalReport& report);

kernels::RelationshipConfig relationship_config_from_json(const Json& j);
loss::LossConfig loss_config_from_json(const Json& j);
train::TrainConfig train_config_from_json(const Json& j);
audit::AuditConfig audit_config_from_json(const Json& j);
train::TrainReport train_report_from_json(const Json& j);
retrieval::RetrievalReport retrieval_report_from_json(const Json& j);

// Pretty-printed with two-space indent and a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace rpl::io
