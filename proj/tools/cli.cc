// Apache License, Version 2.0, refer to LICENSE.txt

#include "cli.hh"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "socialrec/checkpoint.hh"
#include "socialrec/corpus.hh"
#include "socialrec/em.hh"
#include "socialrec/error.hh"
#include "socialrec/eval.hh"
#include "socialrec/group.hh"
#include "socialrec/mapreduce.hh"
#include "socialrec/model.hh"
#include "socialrec/recommender.hh"
#include "socialrec/synth.hh"

namespace socialrec::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string dir = ".";
  std::string interactions;
  std::string friends;
  std::string tags;
  std::string groups;
};

struct SplitOptions {
  double holdout = 0.0;
  std::uint64_t seed = 1;
};

struct TrainOptionsCli {
  std::string variant = "cf+si";
  std::uint32_t topics = 60;
  double epsilon = 1e-4;
  std::uint32_t max_iters = 50;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  bool literal_emissions = false;
  std::size_t combine_block = 1024;
  std::string spill_dir;
  std::string convergence = "absolute";
  std::string out;
  std::string trace;
};

struct Options {
  DataOptions data;
  SplitOptions split;
  SplitOptions eval_split;
  TrainOptionsCli train;
  std::string model;
  std::string user;
  std::string members;
  std::string strategy = "sig";
  std::size_t n = kDefaultTopN;
  std::string out;
  std::vector<std::size_t> cutoffs{std::begin(kDefaultCutoffs), std::end(kDefaultCutoffs)};
  std::vector<std::string> strategies{"avg", "misery", "sig"};
  bool strategies_given = false;
  std::string self_cdf;
  std::string friend_cdf;

  PlantedWorldConfig world;
  std::size_t events = 20000;
  std::size_t group_events = 2000;
  std::size_t group_cap = 3;
  bool no_content = false;
};

void add_data_options(CLI::App& cmd, DataOptions& data) {
  cmd.add_option("--data", data.dir, "Directory holding the corpus files")->envname(kDataDirEnv);
  cmd.add_option("--interactions", data.interactions, "Interactions file (default DIR/interactions.tsv)");
  cmd.add_option("--friends", data.friends, "Friendship file (default DIR/friends.tsv if present)");
  cmd.add_option("--tags", data.tags, "Item tag file (default DIR/tags.tsv if present)");
}

void add_split_options(CLI::App& cmd, SplitOptions& split, double default_holdout) {
  split.holdout = default_holdout;
  cmd.add_option("--holdout", split.holdout, "Per-user fraction of distinct items held out")
      ->check(CLI::Range(0.0, 0.99))
      ->capture_default_str();
  cmd.add_option("--split-seed", split.seed, "Seed of the holdout split")->capture_default_str();
}

std::optional<fs::path> resolve(const std::string& explicit_path, const std::string& dir,
                                const char* default_name, bool required) {
  if (!explicit_path.empty()) {
    if (!fs::exists(explicit_path)) throw DataError("cannot open " + explicit_path);
    return fs::path(explicit_path);
  }
  const auto path = fs::path(dir) / default_name;
  if (fs::exists(path)) return path;
  if (required) throw DataError("cannot open " + path.string());
  return std::nullopt;
}

struct LoadedData {
  Corpus corpus;
  bool has_friends = false;
  bool has_tags = false;
};

LoadedData load_data(const DataOptions& data) {
  const auto interactions = resolve(data.interactions, data.dir, "interactions.tsv", true);
  const auto friends = resolve(data.friends, data.dir, "friends.tsv", false);
  const auto tags = resolve(data.tags, data.dir, "tags.tsv", false);
  return {load_corpus(*interactions, friends, tags), friends.has_value(), tags.has_value()};
}

std::vector<Interaction> train_interactions(const Corpus& corpus, const SplitOptions& split) {
  if (split.holdout <= 0.0) {
    return {corpus.interactions().begin(), corpus.interactions().end()};
  }
  return split_holdout(corpus, split.holdout, split.seed).train;
}

ParamSet load_model(const std::string& path, const Corpus& corpus) {
  if (path.empty()) throw UsageError("--model is required");
  auto params = load_checkpoint(path);
  if (params.num_users() != corpus.num_users() || params.num_items() != corpus.num_items() ||
      (params.content && params.num_tags() != corpus.num_tags())) {
    throw DataError(path + ": checkpoint dimensions do not match the corpus (users " +
                    std::to_string(params.num_users()) + " vs " +
                    std::to_string(corpus.num_users()) + ", items " +
                    std::to_string(params.num_items()) + " vs " +
                    std::to_string(corpus.num_items()) + ")");
  }
  return params;
}

UserIndex resolve_user(const Corpus& corpus, const std::string& id) {
  const auto u = corpus.users().find(id);
  if (!u) throw DataError("unknown user '" + id + "'");
  return *u;
}

GroupStrategy resolve_strategy(const std::string& name) {
  const auto s = parse_group_strategy(name);
  if (!s) throw UsageError("unknown group strategy '" + name + "' (expected sig, avg or misery)");
  return *s;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw DataError("cannot write " + path);
  return file;
}

// Writes to `path`, or to `fallback` when the path is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  auto file = open_output(path);
  fn(file);
  if (!file) throw DataError("error writing " + path);
}

void print_ranked(std::ostream& out, const Corpus& corpus, const RankedList& list) {
  const auto old = out.precision(17);
  out << "rank\titem_id\tscore\n";
  for (std::size_t r = 0; r < list.items.size(); ++r) {
    out << r + 1 << '\t' << corpus.items().name(list.items[r].item) << '\t'
        << list.items[r].score << '\n';
  }
  out.precision(old);
}

int cmd_train(const Options& opt, std::ostream& err) {
  const auto& t = opt.train;
  ModelConfig config;
  try {
    config = config_for_variant(t.variant);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  config.topics = t.topics;
  config.epsilon = t.epsilon;
  config.max_iters = t.max_iters;
  config.seed = t.seed;
  if (t.convergence == "absolute") {
    config.convergence = Convergence::kAbsolute;
  } else if (t.convergence == "per-observation") {
    config.convergence = Convergence::kPerObservation;
  } else {
    throw UsageError("--convergence must be absolute or per-observation");
  }
  try {
    config.validate();
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  if (t.out.empty()) throw UsageError("--out is required");

  auto data = load_data(opt.data);
  if (config.content && !data.has_tags) {
    throw UsageError("variant " + t.variant + " needs a tags file");
  }
  if (!config.social && data.has_friends && data.corpus.num_friend_edges() > 0) {
    err << "warning: variant " << t.variant << " ignores the friends file\n";
  }
  const auto train = train_interactions(data.corpus, opt.split);
  const auto obs = make_observations(data.corpus, train, config.content);
  if (obs.observations.empty()) throw DataError("no training observations");
  if (obs.untagged_pairs > 0) {
    err << "note: " << obs.untagged_pairs << " interactions have untagged items and are skipped\n";
  }
  err << "training " << variant_name(config) << " on " << data.corpus.num_users() << " users, "
      << data.corpus.num_items() << " items, " << obs.observations.size() << " observations\n";

  auto init = init_params(config, data.corpus, train);
  TrainResult result;
  if (t.workers == 0) {
    result = train_from(config, std::move(init), obs.observations);
  } else {
    ParallelOptions parallel;
    parallel.workers = t.workers;
    parallel.combine_block = t.combine_block;
    parallel.mode = t.literal_emissions ? EmissionMode::kLiteral : EmissionMode::kCombined;
    if (!t.spill_dir.empty()) parallel.spill_dir = fs::path(t.spill_dir);
    result = train_parallel_from(config, std::move(init), obs.observations, parallel);
  }
  write_trace(err, result.trace);
  err << (result.trace.reason == StopReason::kConverged ? "converged" : "stopped at max-iters")
      << " after " << result.trace.iterations.size() << " iterations, final log-likelihood "
      << std::setprecision(12) << result.trace.final_log_likelihood << '\n';

  save_checkpoint(t.out, result.params);
  if (!t.trace.empty()) {
    auto file = open_output(t.trace);
    write_trace(file, result.trace, false);
  }
  return kExitOk;
}

int cmd_recommend(const Options& opt, std::ostream& out) {
  if (opt.user.empty()) throw UsageError("--user is required");
  if (opt.n == 0) throw UsageError("--n must be >= 1");
  const auto data = load_data(opt.data);
  const auto params = load_model(opt.model, data.corpus);
  const auto u = resolve_user(data.corpus, opt.user);
  const auto train = train_interactions(data.corpus, opt.split);
  const auto list = recommend_top_n(params, data.corpus, train, u, opt.n);
  emit(opt.out, out, [&](std::ostream& o) { print_ranked(o, data.corpus, list); });
  return kExitOk;
}

std::vector<UserIndex> parse_members(const Corpus& corpus, const std::string& spec) {
  std::vector<UserIndex> members;
  std::stringstream in(spec);
  std::string id;
  while (std::getline(in, id, ',')) {
    if (!id.empty()) members.push_back(resolve_user(corpus, id));
  }
  std::sort(members.begin(), members.end());
  if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
    throw UsageError("--members lists a user twice");
  }
  if (members.size() < 2) throw UsageError("--members needs at least two users");
  return members;
}

int cmd_group(const Options& opt, std::ostream& out) {
  if (opt.members.empty()) throw UsageError("--members is required");
  if (opt.n == 0) throw UsageError("--n must be >= 1");
  const auto strategy = resolve_strategy(opt.strategy);
  const auto data = load_data(opt.data);
  const auto params = load_model(opt.model, data.corpus);
  const auto members = parse_members(data.corpus, opt.members);
  const auto train = train_interactions(data.corpus, opt.split);
  RankedList list;
  try {
    list = recommend_group(params, data.corpus, train, members, opt.n, strategy);
  } catch (const IsolatedMembersError& e) {
    std::string names;
    for (auto u : e.members()) names += " " + data.corpus.users().name(u);
    throw DataError("group members without an in-group friend:" + names);
  }
  emit(opt.out, out, [&](std::ostream& o) { print_ranked(o, data.corpus, list); });
  return kExitOk;
}

int cmd_eval(const Options& opt, std::ostream& out, std::ostream& err) {
  std::vector<GroupStrategy> strategies;
  for (const auto& name : opt.strategies) strategies.push_back(resolve_strategy(name));
  for (auto n : opt.cutoffs) {
    if (n == 0) throw UsageError("--cutoffs must be >= 1");
  }
  const auto data = load_data(opt.data);
  const auto params = load_model(opt.model, data.corpus);
  const auto groups_path = resolve(opt.data.groups, opt.data.dir, "groups.tsv", false);
  const bool wants_sig = std::find(strategies.begin(), strategies.end(),
                                   GroupStrategy::kSocialInfluence) != strategies.end();
  if (!groups_path && wants_sig && opt.strategies_given) {
    throw UsageError("sig evaluation needs a group events file (--groups)");
  }

  Split split;
  if (opt.eval_split.holdout > 0.0) {
    split = split_holdout(data.corpus, opt.eval_split.holdout, opt.eval_split.seed);
  } else {
    split.train.assign(data.corpus.interactions().begin(), data.corpus.interactions().end());
    err << "warning: --holdout 0 leaves no test interactions\n";
  }
  const auto pr = precision_recall_at_n(params, data.corpus, split, opt.cutoffs);

  std::vector<RelativeRankingResult> rankings;
  if (groups_path) {
    const auto load = load_group_events(*groups_path, data.corpus);
    if (load.dropped > 0 || load.unknown_members > 0) {
      err << "warning: " << load.dropped << " group events dropped, " << load.unknown_members
          << " unknown members\n";
    }
    for (auto s : strategies) {
      rankings.push_back(relative_ranking(params, data.corpus, split.train, load.events, s));
    }
  }
  emit(opt.out, out, [&](std::ostream& o) {
    write_metrics(o, pr);
    write_metrics(o, rankings);
  });
  return kExitOk;
}

int cmd_synth(const Options& opt, std::ostream& out, std::ostream& err) {
  if (opt.out.empty()) throw UsageError("--out is required");
  if (opt.events == 0) throw UsageError("--events must be >= 1");
  auto config = opt.world;
  config.content = !opt.no_content;
  PlantedWorld world;
  try {
    world = make_planted_world(config);
  } catch (const ContractViolation& e) {
    throw UsageError(e.what());
  }
  const auto events = sample_corpus(world, opt.events, config.seed);
  const auto generated = corpus_from_events(world, events);
  const fs::path dir(opt.out);
  write_corpus(generated, dir);
  const auto reloaded = load_corpus(dir / "interactions.tsv", dir / "friends.tsv", dir / "tags.tsv");

  std::vector<GroupEvent> groups;
  std::size_t dropped = 0;
  if (opt.group_events > 0) {
    GroupSampling sampling;
    sampling.max_size = opt.group_cap;
    // Events whose item never occurs in the sampled interactions would be
    // unknown to the reloaded corpus.
    for (auto& e : sample_group_events(world, opt.group_events, config.seed + 1, sampling)) {
      if (reloaded.items().find(generated.items().name(e.item))) {
        groups.push_back(std::move(e));
      } else {
        ++dropped;
      }
    }
  }
  write_group_events(dir / "groups.tsv", generated, groups);
  save_checkpoint(dir / "planted.ckpt", remap_params(world.true_params, generated, reloaded));

  const auto old = out.precision(17);
  out << "users\t-\t" << reloaded.num_users() << '\n';
  out << "items\t-\t" << reloaded.num_items() << '\n';
  out << "tags\t-\t" << reloaded.num_tags() << '\n';
  out << "events\t-\t" << events.size() << '\n';
  out << "group_events\t-\t" << groups.size() << '\n';
  out << "friend_influence_mass\t-\t" << world.friend_influence_mass() << '\n';
  out.precision(old);
  if (dropped > 0) err << "note: " << dropped << " group events with unsampled items dropped\n";
  return kExitOk;
}

int cmd_inspect(const Options& opt, std::ostream& out) {
  if (opt.model.empty()) throw UsageError("--model is required");
  const auto params = load_checkpoint(opt.model);
  const auto cdf = influence_cdf(params);
  if (!opt.self_cdf.empty()) {
    auto file = open_output(opt.self_cdf);
    write_cdf(file, cdf.self);
  }
  if (!opt.friend_cdf.empty()) {
    auto file = open_output(opt.friend_cdf);
    write_cdf(file, cdf.friend_);
  }
  double self_total = 0.0;
  for (const auto& p : cdf.self) self_total += p.value;
  double friend_total = 0.0;
  for (const auto& p : cdf.friend_) friend_total += p.value;
  const auto users = static_cast<double>(std::max<std::size_t>(1, cdf.self.size()));
  const auto old = out.precision(17);
  out << "mean_self_influence\t-\t" << self_total / users << '\n';
  out << "mean_friend_influence_mass\t-\t" << friend_total / users << '\n';
  out << "friend_terms\t-\t" << cdf.friend_.size() << '\n';
  out.precision(old);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Social-influence topic model recommender", "socialrec"};
  app.set_config("--config", "", "key=value configuration file; flags take precedence");
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Fit a model and write a checkpoint");
  add_data_options(*train, opt.data);
  add_split_options(*train, opt.split, 0.0);
  auto& t = opt.train;
  train->add_option("--variant", t.variant, "cf, cf+si, cf+ic or cf+si+ic")->capture_default_str();
  train->add_option("--topics", t.topics, "Number of latent topics")->capture_default_str();
  train->add_option("--epsilon", t.epsilon, "Log-likelihood convergence threshold")->capture_default_str();
  train->add_option("--max-iters", t.max_iters, "Iteration cap")->capture_default_str();
  train->add_option("--seed", t.seed, "Initialization seed")->capture_default_str();
  train->add_option("--workers", t.workers, "Map/reduce workers; 0 runs the serial engine")
      ->capture_default_str();
  train->add_flag("--literal-emissions", t.literal_emissions,
                  "Emit item and tag sums per friend instead of per observation");
  train->add_option("--combine-block", t.combine_block,
                    "Observations per mapper-side combiner block; 0 disables combining")
      ->capture_default_str();
  train->add_option("--spill-dir", t.spill_dir, "Write every iteration's emissions here");
  train->add_option("--convergence", t.convergence, "absolute or per-observation")->capture_default_str();
  train->add_option("--out", t.out, "Checkpoint path");
  train->add_option("--trace", t.trace, "Per-iteration log-likelihood trace");

  auto* recommend = app.add_subcommand("recommend", "Top-n fresh items for one user");
  add_data_options(*recommend, opt.data);
  add_split_options(*recommend, opt.split, 0.0);
  recommend->add_option("--model", opt.model, "Checkpoint path");
  recommend->add_option("--user", opt.user, "User id");
  recommend->add_option("--n", opt.n, "List length")->capture_default_str();
  recommend->add_option("--out", opt.out, "Output path (default stdout)");

  auto* group = app.add_subcommand("group", "Top-n items for a group");
  add_data_options(*group, opt.data);
  add_split_options(*group, opt.split, 0.0);
  group->add_option("--model", opt.model, "Checkpoint path");
  group->add_option("--members", opt.members, "Comma-separated user ids");
  group->add_option("--strategy", opt.strategy, "sig, avg or misery")->capture_default_str();
  group->add_option("--n", opt.n, "List length")->capture_default_str();
  group->add_option("--out", opt.out, "Output path (default stdout)");

  auto* eval = app.add_subcommand("eval", "Precision/recall@n and group relative ranking");
  add_data_options(*eval, opt.data);
  add_split_options(*eval, opt.eval_split, kDefaultHoldoutFraction);
  eval->add_option("--groups", opt.data.groups, "Group events file (default DIR/groups.tsv if present)");
  eval->add_option("--model", opt.model, "Checkpoint trained on the same split");
  eval->add_option("--cutoffs", opt.cutoffs, "List lengths n")->delimiter(',')->capture_default_str();
  eval->add_option("--strategies", opt.strategies, "Group strategies")->delimiter(',')->capture_default_str();
  eval->add_option("--out", opt.out, "Report path (default stdout)");

  auto* synth = app.add_subcommand("synth", "Sample a corpus from a planted model");
  auto& w = opt.world;
  synth->add_option("--users", w.users, "Users")->capture_default_str();
  synth->add_option("--items", w.items, "Items")->capture_default_str();
  synth->add_option("--tag-count", w.tags, "Distinct tags")->capture_default_str();
  synth->add_option("--topics", w.topics, "Planted topics")->capture_default_str();
  synth->add_option("--avg-friends", w.avg_friends, "Mean non-self friends")->capture_default_str();
  synth->add_option("--self-weight", w.self_weight, "Share of Pr(u|f) kept on f itself")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("--topic-focus", w.topic_focus, "Mass on each user's primary topic")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("--events", opt.events, "Interaction events")->capture_default_str();
  synth->add_option("--group-events", opt.group_events, "Group events")->capture_default_str();
  synth->add_option("--group-cap", opt.group_cap, "Largest group size")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}))
      ->capture_default_str();
  synth->add_flag("--no-content", opt.no_content, "Sample without tags");
  synth->add_option("--seed", w.seed, "Seed")->capture_default_str();
  synth->add_option("--out", opt.out, "Output directory");

  auto* inspect = app.add_subcommand("inspect-influence", "Self and friend influence distributions");
  inspect->add_option("--model", opt.model, "Checkpoint path");
  inspect->add_option("--self-cdf", opt.self_cdf, "Write the self-influence CDF here");
  inspect->add_option("--friend-cdf", opt.friend_cdf, "Write the friend-influence CDF here");

  eval->final_callback([&] { opt.strategies_given = eval->count("--strategies") > 0; });

  std::vector<const char*> argv{"socialrec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(opt, err);
    if (recommend->parsed()) return cmd_recommend(opt, out);
    if (group->parsed()) return cmd_group(opt, out);
    if (eval->parsed()) return cmd_eval(opt, out, err);
    if (synth->parsed()) return cmd_synth(opt, out, err);
    if (inspect->parsed()) return cmd_inspect(opt, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IsolatedMembersError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace socialrec::cli
