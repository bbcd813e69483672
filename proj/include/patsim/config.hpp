#pragma once

#include "patsim/ionmap.hpp"
#include "patsim/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace patsim {

using Json = nlohmann::ordered_json;

// Reads a JSON document (comments allowed) and resolves every "$include" key.
// "$include" takes a path or a list of paths relative to the including file;
// included objects are merged in order, then the local keys are merged on top
// (JSON merge patch: objects merge recursively, null deletes a key, other values replace).
Json load_config(const std::filesystem::path& path);
Json resolve_includes(const Json& j, const std::filesystem::path& base_dir);
void deep_merge(Json& into, const Json& from);

ModelSpec model_from_json(const Json& j, const std::string& path = "model");
Json model_to_json(const ModelSpec& m);

IonArrayParams ion_from_json(const Json& j, const std::string& path = "ion");
Json ion_to_json(const IonArrayParams& p);

// Typed field access; errors carry the dotted field path.
namespace cfg {
const Json& require(const Json& obj, const std::string& key, const std::string& path);
double number(const Json& v, const std::string& path);
int integer(const Json& v, const std::string& path);
std::string string(const Json& v, const std::string& path);
bool boolean(const Json& v, const std::string& path);
cplx complex(const Json& v, const std::string& path);
Site site(const Json& v, const std::string& path);
void expect_object(const Json& v, const std::string& path);
// Rejects keys outside `allowed`.
void only_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& path);
}  // namespace cfg

}  // namespace patsim
