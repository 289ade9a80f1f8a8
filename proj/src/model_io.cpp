#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "nnm/error.hpp"
#include "nnm/model.hpp"

namespace nnm {

using ojson = nlohmann::ordered_json;

std::string model_to_json(const NnmModel& model) {
  ojson doc;
  doc["version"] = kModelFormatVersion;
  doc["mode"] = std::string(to_string(model.mode()));
  doc["D"] = model.dimension();
  doc["Z"] = model.levels();

  ojson users = ojson::object();
  for (std::size_t u = 0; u < model.users().size(); ++u) {
    const auto p = model.user(u);
    users[std::to_string(model.users().id(u))] = std::vector<double>(p.begin(), p.end());
  }
  ojson items = ojson::object();
  const auto d = static_cast<std::size_t>(model.dimension());
  for (std::size_t i = 0; i < model.items().size(); ++i) {
    const auto row = model.item(i);
    const auto key = std::to_string(model.items().id(i));
    if (model.mode() == Mode::binary) {
      items[key] = std::vector<double>(row.begin(), row.end());
    } else {
      ojson outcomes = ojson::array();
      for (std::size_t z = 0; z < static_cast<std::size_t>(model.levels()); ++z) {
        const auto col = row.subspan(z * d, d);
        outcomes.push_back(std::vector<double>(col.begin(), col.end()));
      }
      items[key] = std::move(outcomes);
    }
  }
  doc["users"] = std::move(users);
  doc["items"] = std::move(items);
  // nlohmann emits the shortest decimal form that parses back to the same double.
  return doc.dump(1) + "\n";
}

namespace {

Id parse_id(const std::string& key) {
  Id id = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
  if (ec != std::errc() || ptr != key.data() + key.size()) {
    throw UserError("model: malformed id '" + key + "'");
  }
  return id;
}

void copy_vector(const nlohmann::json& src, std::span<double> dst, const std::string& subject) {
  if (!src.is_array() || src.size() != dst.size()) {
    throw UserError("model: " + subject + " must be an array of " + std::to_string(dst.size()) +
                    " numbers");
  }
  for (std::size_t k = 0; k < dst.size(); ++k) {
    if (!src[k].is_number()) throw UserError("model: " + subject + " holds a non-number");
    dst[k] = src[k].get<double>();
  }
}

}  // namespace

NnmModel model_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UserError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw UserError("model: unsupported format version " + std::to_string(version));
    }
    const Mode mode = parse_mode(doc.at("mode").get<std::string>());
    const int d = doc.at("D").get<int>();
    const int z = doc.at("Z").get<int>();
    const auto& users = doc.at("users");
    const auto& items = doc.at("items");

    std::vector<Id> user_ids, item_ids;
    for (const auto& [key, _] : users.items()) user_ids.push_back(parse_id(key));
    for (const auto& [key, _] : items.items()) item_ids.push_back(parse_id(key));
    NnmModel model(mode, d, z, IdIndex(std::move(user_ids)), IdIndex(std::move(item_ids)));

    for (const auto& [key, value] : users.items()) {
      const auto subject = "user " + key;
      copy_vector(value, model.user(model.users().at(parse_id(key))), subject);
    }
    const auto du = static_cast<std::size_t>(d);
    for (const auto& [key, value] : items.items()) {
      const auto row = model.item(model.items().at(parse_id(key)));
      const auto subject = "item " + key;
      if (mode == Mode::binary) {
        copy_vector(value, row, subject);
      } else {
        if (!value.is_array() || value.size() != static_cast<std::size_t>(z)) {
          throw UserError("model: " + subject + " must hold Z outcome vectors");
        }
        for (std::size_t o = 0; o < static_cast<std::size_t>(z); ++o) {
          copy_vector(value[o], row.subspan(o * du, du), subject);
        }
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw UserError(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const NnmModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << model_to_json(model);
  if (!out) throw UserError("failed writing " + path.string());
}

NnmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace nnm
