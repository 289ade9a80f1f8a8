// nnm: fit, evaluate and inspect normalized nonnegative models on MovieLens data.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "nnm/data.hpp"
#include "nnm/error.hpp"
#include "nnm/eval.hpp"
#include "nnm/fit.hpp"
#include "nnm/interpret.hpp"
#include "nnm/model.hpp"
#include "nnm/online.hpp"

namespace fs = std::filesystem;

namespace {

struct DataArgs {
  std::string path;
  std::string format = "ml-100k";
  std::optional<int> levels;
};

struct FitArgs {
  int dim = 3;
  int iters = 16;
  int pre_iters = 2;
  std::string preprocessing = "auto";
  int negatives = 1;
  std::string mode = "binary";
  double tolerance = 1e-8;
  int inner_iters = 500;
  std::optional<std::uint64_t> seed;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

void add_data_options(CLI::App& app, DataArgs& args) {
  app.add_option("--data", args.path, "Ratings file")->required();
  app.add_option("--format", args.format, "ml-100k, ml-1m or csv")->capture_default_str();
  app.add_option("--z", args.levels, "Number of rating levels (mandatory for empty csv input)");
}

void add_fit_options(CLI::App& app, FitArgs& args) {
  app.add_option("--dim", args.dim, "Latent dimension D")->capture_default_str();
  app.add_option("--iters", args.iters, "Outer iterations")->capture_default_str();
  app.add_option("--pre-iters", args.pre_iters, "Iterations with unknown entries set to zero")->capture_default_str();
  app.add_option("--preprocessing", args.preprocessing, "auto, dense-zero-fill or negative-sampling")
      ->capture_default_str();
  app.add_option("--negatives", args.negatives, "Sampled unknown entries per known entry")->capture_default_str();
  app.add_option("--mode", args.mode, "binary or categorical")->capture_default_str();
  app.add_option("--tol", args.tolerance, "Inner solver relative tolerance")->capture_default_str();
  app.add_option("--inner-iters", args.inner_iters, "Inner solver iteration cap")->capture_default_str();
  app.add_option("--seed", args.seed, "Random seed")->required();
  app.add_option("--threads", args.threads, "Worker threads")->capture_default_str();
}

nnm::FitConfig make_fit_config(const FitArgs& a) {
  nnm::FitConfig c;
  c.dimension = a.dim;
  c.max_outer_iters = a.iters;
  c.preprocessing_iters = a.pre_iters;
  c.preprocessing = nnm::parse_preprocessing(a.preprocessing);
  c.negatives_per_rating = a.negatives;
  c.mode = nnm::parse_mode(a.mode);
  c.inner.tolerance = a.tolerance;
  c.inner.max_iterations = a.inner_iters;
  c.seed = a.seed.value_or(0);
  c.threads = a.threads;
  c.validate();
  return c;
}

nnm::RatingDataset load_data(const DataArgs& a) {
  return nnm::load_ratings(a.path, nnm::parse_rating_format(a.format), a.levels);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nnm::UserError("cannot write " + path.string());
  out << text;
  if (!out) throw nnm::UserError("failed writing " + path.string());
  spdlog::info("wrote {}", path.string());
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw nnm::UserError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw nnm::UserError(std::string(what) + " not found: " + path);
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("nnm");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("NNM_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off") {
      spdlog::warn("NNM_LOG='{}' not recognised; using info", level);
    } else {
      spdlog::set_level(parsed);
    }
  }
}

std::vector<nnm::FoldInRating> read_pairs(std::istream& in) {
  std::vector<nnm::FoldInRating> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string a, b;
    long long id = 0;
    int stars = 0;
    if (!std::getline(fields, a, ',') || !std::getline(fields, b) ||
        !(std::istringstream(a) >> id) || !(std::istringstream(b) >> stars)) {
      throw nnm::ParseError("<stdin>", number, "expected 'id,stars'");
    }
    out.emplace_back(static_cast<nnm::Id>(id), stars);
  }
  if (out.empty()) throw nnm::UserError("fold-in: no ratings on stdin");
  return out;
}

std::vector<int> parse_dims(const std::string& spec) {
  std::vector<int> dims;
  std::istringstream in(spec);
  std::string token;
  while (std::getline(in, token, ',')) {
    const auto dash = token.find('-');
    try {
      if (dash != std::string::npos) {
        const int lo = std::stoi(token.substr(0, dash));
        const int hi = std::stoi(token.substr(dash + 1));
        for (int d = lo; d <= hi; ++d) dims.push_back(d);
      } else {
        dims.push_back(std::stoi(token));
      }
    } catch (const std::logic_error&) {
      throw nnm::ConfigError("malformed --dims '" + spec + "'");
    }
  }
  if (dims.empty()) throw nnm::ConfigError("--dims is empty");
  return dims;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Normalized nonnegative models for rating data"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir = ".";
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();

  // fit
  DataArgs fit_data;
  FitArgs fit_args;
  std::size_t anchor_users = 0, anchor_items = 0;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model; writes model.json and fit_report.csv");
  add_data_options(*fit_cmd, fit_data);
  add_fit_options(*fit_cmd, fit_args);
  fit_cmd->add_option("--anchor-users", anchor_users, "Fit on the N most active users and fold in the rest");
  fit_cmd->add_option("--anchor-items", anchor_items, "Fit on the M most rated items and fold in the rest");

  // evaluate
  DataArgs eval_data;
  FitArgs eval_args;
  int folds = 5;
  std::string mapping = "rounded";
  std::string curve;
  std::string dims = "1-8";
  auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validate; writes metrics.json and metrics.csv");
  add_data_options(*eval_cmd, eval_data);
  add_fit_options(*eval_cmd, eval_args);
  eval_cmd->add_option("--folds", folds, "Number of folds")->capture_default_str();
  eval_cmd->add_option("--star-mapping", mapping, "rounded or continuous")->capture_default_str();
  eval_cmd->add_option("--curve", curve, "Also write curve_dim.csv or curve_iter.csv")
      ->check(CLI::IsMember({"dim", "iter"}));
  eval_cmd->add_option("--dims", dims, "Dimensions for --curve dim, e.g. 1-8 or 2,4,8")->capture_default_str();

  // stereotypes / hierarchy
  std::string model_path, tags_path, tag_format = "ml-100k";
  DataArgs st_data;
  double threshold = 0.9;
  std::size_t top = 10;
  auto* st_cmd = app.add_subcommand("stereotypes", "Tag profiles and favourite items of each stereotype");
  st_cmd->add_option("--model", model_path, "Model JSON")->required();
  st_cmd->add_option("--tags", tags_path, "u.item or movies.dat")->required();
  st_cmd->add_option("--tag-format", tag_format, "ml-100k or ml-1m")->capture_default_str();
  st_cmd->add_option("--data", st_data.path, "Ratings file used for popularity");
  st_cmd->add_option("--format", st_data.format, "Ratings format")->capture_default_str();
  st_cmd->add_option("--threshold", threshold, "Like-probability threshold for item lists")->capture_default_str();
  st_cmd->add_option("--top", top, "Items per stereotype")->capture_default_str();

  double epsilon = 1.0 / 3.0;
  std::vector<std::string> exclude;
  bool reduce = false;
  auto* h_cmd = app.add_subcommand("hierarchy", "Tag hierarchy as DOT; writes hierarchy.dot");
  h_cmd->add_option("--model", model_path, "Model JSON")->required();
  h_cmd->add_option("--tags", tags_path, "u.item or movies.dat")->required();
  h_cmd->add_option("--tag-format", tag_format, "ml-100k or ml-1m")->capture_default_str();
  h_cmd->add_option("--epsilon", epsilon, "Containment slack in [0,1]")->capture_default_str();
  h_cmd->add_option("--exclude", exclude, "Tag to leave out (repeatable)");
  h_cmd->add_flag("--reduce", reduce, "Apply transitive reduction");

  // fold-in / predict
  bool fold_item = false;
  auto* fi_cmd = app.add_subcommand("fold-in", "Read 'item,stars' lines on stdin and print the user vector");
  fi_cmd->add_option("--model", model_path, "Model JSON")->required();
  fi_cmd->add_flag("--item", fold_item, "Read 'user,stars' lines and print an item vector instead");

  nnm::Id user_id = 0, item_id = 0;
  auto* pr_cmd = app.add_subcommand("predict", "Predict one rating");
  pr_cmd->add_option("--model", model_path, "Model JSON")->required();
  pr_cmd->add_option("--user", user_id, "User id")->required();
  pr_cmd->add_option("--item", item_id, "Item id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*fit_cmd) {
      require_file(fit_data.path, "ratings file");
      const auto config = make_fit_config(fit_args);
      const auto out = prepare_out(out_dir);
      const auto data = load_data(fit_data);
      if (anchor_users > 0 || anchor_items > 0) {
        const auto anchors = nnm::select_anchors(data, anchor_users > 0 ? anchor_users : data.num_users(),
                                                 anchor_items > 0 ? anchor_items : data.num_items());
        auto result = nnm::fit_anchored(data, anchors, config);
        nnm::save_model(out / "model.json", result.model);
        result.anchor_report.write_csv(out / "fit_report.csv");
        spdlog::info("folded in {} users and {} items", result.folded_users, result.folded_items);
      } else {
        auto result = nnm::fit(data, config);
        nnm::save_model(out / "model.json", result.model);
        result.report.write_csv(out / "fit_report.csv");
        spdlog::info("final objective {:.6g}", result.report.steps.back().objective);
      }
    } else if (*eval_cmd) {
      require_file(eval_data.path, "ratings file");
      nnm::EvalConfig config;
      config.fit = make_fit_config(eval_args);
      config.folds = folds;
      config.split_seed = config.fit.seed;
      config.mapping = nnm::parse_star_mapping(mapping);
      config.validate();
      const auto dim_list = curve == "dim" ? parse_dims(dims) : std::vector<int>{};
      const auto out = prepare_out(out_dir);
      const auto data = load_data(eval_data);
      const auto report = nnm::cross_validate(data, config);
      write_file(out / "metrics.json", report.to_json());
      write_file(out / "metrics.csv", report.to_csv());
      if (curve == "dim") {
        write_file(out / "curve_dim.csv", nnm::to_csv(nnm::curve_vs_dimension(data, dim_list, config)));
      } else if (curve == "iter") {
        write_file(out / "curve_iter.csv", nnm::to_csv(nnm::curve_vs_iteration(data, config)));
      }
      std::cout << "MAE " << report.mean_mae << " RMSE " << report.mean_rmse << "\n";
    } else if (*st_cmd) {
      require_file(model_path, "model file");
      require_file(tags_path, "tag file");
      const auto model = nnm::load_model(model_path);
      const auto tags = nnm::load_tags(tags_path, nnm::parse_tag_format(tag_format));
      nnm::RatingDataset data;
      if (!st_data.path.empty()) {
        require_file(st_data.path, "ratings file");
        data = load_data(st_data);
      } else {
        spdlog::warn("no --data given; item lists are ordered by id only");
      }
      const auto titles = nnm::load_item_titles(tags_path, nnm::parse_tag_format(tag_format));
      const auto out = prepare_out(out_dir);
      write_file(out / "stereotypes.csv", nnm::stereotype_profiles(model, tags).to_csv());
      std::ostringstream lists;
      lists << "omega,rank,item,ratings,like,title\n";
      for (int w = 1; w <= model.dimension(); ++w) {
        const auto items = nnm::stereotype_item_lists(model, data, w, threshold, top);
        for (std::size_t r = 0; r < items.size(); ++r) {
          const auto t = titles.find(items[r].item);
          std::string title = t == titles.end() ? "" : t->second;
          std::string escaped;
          for (const char c : title) escaped += c == '"' ? std::string("\"\"") : std::string(1, c);
          lists << w << ',' << r + 1 << ',' << items[r].item << ',' << items[r].ratings << ',' << items[r].like
                << ",\"" << escaped << "\"\n";
        }
      }
      write_file(out / "stereotype_items.csv", lists.str());
    } else if (*h_cmd) {
      require_file(model_path, "model file");
      require_file(tags_path, "tag file");
      if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw nnm::ConfigError("--epsilon must lie in [0, 1]");
      const auto model = nnm::load_model(model_path);
      const auto tags = nnm::load_tags(tags_path, nnm::parse_tag_format(tag_format));
      const auto profile = nnm::stereotype_profiles(model, tags);
      std::vector<nnm::TagVector> vectors;
      const auto d = static_cast<std::size_t>(profile.dimension);
      for (std::size_t g = 0; g < profile.tags.size(); ++g) {
        vectors.push_back({profile.tags[g], {profile.values.begin() + static_cast<std::ptrdiff_t>(g * d),
                                             profile.values.begin() + static_cast<std::ptrdiff_t>((g + 1) * d)}});
      }
      for (const auto& x : exclude) {
        if (!tags.find(x)) spdlog::warn("--exclude '{}' names no tag", x);
      }
      const auto graph = nnm::hierarchy_edges(vectors, epsilon);
      nnm::DotOptions options;
      options.exclude = {exclude.begin(), exclude.end()};
      options.transitive_reduction = reduce;
      const auto out = prepare_out(out_dir);
      write_file(out / "hierarchy.dot", nnm::export_dot(graph, options));
    } else if (*fi_cmd) {
      require_file(model_path, "model file");
      const auto model = nnm::load_model(model_path);
      const auto ratings = read_pairs(std::cin);
      const auto v = fold_item ? nnm::fold_in_item(model, ratings).entries : nnm::fold_in_user(model, ratings).entries;
      std::cout << nlohmann::json(v).dump() << "\n";
    } else if (*pr_cmd) {
      require_file(model_path, "model file");
      const auto model = nnm::load_model(model_path);
      const auto dist = nnm::predict_distribution(model, user_id, item_id);
      nlohmann::ordered_json doc;
      doc["user"] = user_id;
      doc["item"] = item_id;
      if (model.mode() == nnm::Mode::binary) doc["score"] = dist.front();
      doc["distribution"] = dist;
      doc["argmax"] = nnm::argmax_outcome(dist);
      doc["stars"] = nnm::predict_stars(model, user_id, item_id);
      std::cout << doc.dump() << "\n";
    }
  } catch (const nnm::UserError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return 2;
  }
  return 0;
}
