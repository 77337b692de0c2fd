// Copyright 2026 The motas-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "motas/augmentation.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <optional>
#include <set>
#include <thread>
#include <unordered_map>

#include "motas/error.hpp"
#include "motas/rng.hpp"

namespace motas {

using nlohmann::json;
namespace fs = std::filesystem;

std::size_t synthetic_quota(double factor, std::size_t class_size) {
  if (!(factor >= 1.0)) throw InvalidArgument("augmentation factor must be >= 1");
  return static_cast<std::size_t>(std::llround((factor - 1.0) * static_cast<double>(class_size)));
}

PairPlan plan_pairs(std::span<const CohortItem> cohort, double factor, std::uint64_t seed) {
  if (!(factor >= 1.0))
    throw InvalidArgument("augmentation factor must be >= 1, got " + std::to_string(factor));
  PairPlan plan;
  plan.factor = factor;
  plan.seed = seed;

  std::set<std::string> taken;
  for (const auto& item : cohort) taken.insert(item.id);

  for (Label label : {Label::kAD, Label::kCN}) {
    std::vector<const CohortItem*> members;
    for (const auto& item : cohort)
      if (item.source == Source::kReal && item.label == label) members.push_back(&item);
    const std::size_t quota = synthetic_quota(factor, members.size());
    if (quota == 0) continue;
    if (members.size() < 2)
      throw DataError("class " + std::string(to_string(label)) + " needs at least 2 real items, has " +
                      std::to_string(members.size()));

    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(label_value(label))));
    std::vector<const CohortItem*> roster = members;
    rng.shuffle(std::span(roster));

    std::unordered_map<std::string, std::set<std::string>> used;
    std::unordered_map<std::string, int> pair_count;
    for (std::size_t r = 0; r < quota; ++r) {
      const CohortItem& voice = *roster[r % roster.size()];
      auto& seen = used[voice.id];
      std::vector<const CohortItem*> candidates;
      const auto gather = [&] {
        candidates.clear();
        for (const auto* m : members)
          if (m->id != voice.id && m->subject_key() != voice.subject_key() && !seen.count(m->id))
            candidates.push_back(m);
      };
      gather();
      if (candidates.empty()) {
        seen.clear();
        gather();
      }
      if (candidates.empty())
        throw DataError("no transcript donor for voice '" + voice.id +
                        "': every same-class item shares its subject");
      const CohortItem& donor = *candidates[rng.uniform_index(candidates.size())];
      seen.insert(donor.id);

      std::string synth_id = voice.id + "__x__" + donor.id;
      const int n = ++pair_count[synth_id];
      if (n > 1) synth_id += "__" + std::to_string(n);
      if (!taken.insert(synth_id).second)
        throw DataError("synthetic id '" + synth_id + "' collides with an existing id");
      plan.records.push_back({synth_id, label, voice.id, donor.id});
    }
  }
  return plan;
}

void check_plan(const PairPlan& plan, std::span<const CohortItem> cohort) {
  std::unordered_map<std::string, const CohortItem*> by_id;
  for (const auto& item : cohort) by_id[item.id] = &item;
  std::set<std::string> ids;
  for (const auto& r : plan.records) {
    if (!ids.insert(r.synth_id).second) throw DataError("duplicate synth_id '" + r.synth_id + "'");
    const auto v = by_id.find(r.voice_id), t = by_id.find(r.transcript_id);
    if (v == by_id.end() || t == by_id.end())
      throw DataError("plan record '" + r.synth_id + "' references an unknown id");
    if (r.voice_id == r.transcript_id)
      throw DataError("plan record '" + r.synth_id + "' pairs an item with itself");
    if (v->second->label != r.label || t->second->label != r.label)
      throw DataError("plan record '" + r.synth_id + "' crosses classes");
    if (v->second->source != Source::kReal || t->second->source != Source::kReal)
      throw DataError("plan record '" + r.synth_id + "' uses a synthetic donor");
  }
}

std::string plan_to_jsonl(const PairPlan& plan) {
  std::string out;
  for (const auto& r : plan.records) {
    json j = {{"synth_id", r.synth_id},
              {"label", std::string(to_string(r.label))},
              {"voice_id", r.voice_id},
              {"transcript_id", r.transcript_id}};
    out += j.dump() + "\n";
  }
  return out;
}

PairPlan plan_from_jsonl(std::string_view text) {
  PairPlan plan;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      plan.records.push_back({j.at("synth_id").get<std::string>(),
                              parse_label(j.at("label").get<std::string>()),
                              j.at("voice_id").get<std::string>(),
                              j.at("transcript_id").get<std::string>()});
    } catch (const json::exception& e) {
      throw DataError("plan line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("plan line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return plan;
}

void write_plan(const fs::path& path, const PairPlan& plan) {
  write_text_file(path, plan_to_jsonl(plan));
}

PairPlan read_plan(const fs::path& path) { return plan_from_jsonl(read_text_file(path)); }

std::string clean_transcript(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (char ch : raw) {
    const unsigned char c = static_cast<unsigned char>(ch);
    char lower = (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
    const bool keep = (lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') ||
                      lower == '\'' || lower == '-';
    if (keep) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(lower);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = true;
    }
  }
  return out;
}

ExternalToolConfig with_env_overrides(ExternalToolConfig cfg) {
  if (const char* env = std::getenv("MOTAS_TOOL_TIMEOUT_S"); env && *env) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0.0))
      throw InvalidArgument(std::string("MOTAS_TOOL_TIMEOUT_S must be a positive number, got '") +
                            env + "'");
    cfg.timeout_s = v;
  }
  return cfg;
}

void require_placeholders(std::string_view tmpl, std::span<const std::string_view> names) {
  for (auto name : names) {
    const std::string token = "{" + std::string(name) + "}";
    if (tmpl.find(token) == std::string_view::npos)
      throw InvalidArgument("command template lacks placeholder " + token);
  }
}

std::string shell_quote(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'')
      out += "'\\''";
    else
      out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string expand_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    if (auto it = values.find(name); it != values.end()) {
      out += shell_quote(it->second);
      pos = close + 1;
    } else {
      out.push_back('{');
      pos = open + 1;
    }
  }
  return out;
}

namespace {

constexpr std::size_t kOutputTail = 1024;

// Appends whatever the pipe holds right now, keeping the last kOutputTail bytes.
void drain(int fd, std::string& tail) {
  char buf[4096];
  for (;;) {
    const ssize_t n = read(fd, buf, sizeof buf);
    if (n > 0) {
      tail.append(buf, static_cast<std::size_t>(n));
      if (tail.size() > kOutputTail) tail.erase(0, tail.size() - kOutputTail);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    return;
  }
}

std::string last_line(std::string text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  const auto nl = text.find_last_of('\n');
  return nl == std::string::npos ? text : text.substr(nl + 1);
}

}  // namespace

CommandOutcome run_command(const std::string& command, double timeout_s) {
  CommandOutcome outcome;
  int fds[2];
  if (pipe(fds) != 0) {
    outcome.exit_code = -1;
    outcome.message = std::string("pipe failed: ") + std::strerror(errno);
    return outcome;
  }
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    outcome.exit_code = -1;
    outcome.message = std::string("fork failed: ") + std::strerror(errno);
    return outcome;
  }
  if (pid == 0) {
    setpgid(0, 0);
    close(fds[0]);
    dup2(fds[1], STDOUT_FILENO);
    dup2(fds[1], STDERR_FILENO);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(fds[1]);
  fcntl(fds[0], F_SETFL, fcntl(fds[0], F_GETFL) | O_NONBLOCK);
  std::string tail;

  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(timeout_s));
  int status = 0;
  auto delay = std::chrono::milliseconds(1);
  for (;;) {
    drain(fds[0], tail);
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) {
      close(fds[0]);
      outcome.exit_code = -1;
      outcome.message = std::string("waitpid failed: ") + std::strerror(errno);
      return outcome;
    }
    if (Clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
      close(fds[0]);
      outcome.timed_out = true;
      outcome.exit_code = -1;
      char buf[64];
      std::snprintf(buf, sizeof buf, "timed out after %g s", timeout_s);
      outcome.message = buf;
      return outcome;
    }
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, std::chrono::milliseconds(50));
  }
  drain(fds[0], tail);
  close(fds[0]);

  if (WIFEXITED(status)) {
    outcome.exit_code = WEXITSTATUS(status);
    if (outcome.exit_code == 127)
      outcome.message = "command not found";
    else if (outcome.exit_code == 126)
      outcome.message = "command not executable";
    else if (outcome.exit_code != 0)
      outcome.message = "exited with status " + std::to_string(outcome.exit_code);
  } else if (WIFSIGNALED(status)) {
    outcome.exit_code = -1;
    outcome.message = "killed by signal " + std::to_string(WTERMSIG(status));
  }
  if (!outcome.ok()) {
    const std::string line = last_line(tail);
    if (!line.empty()) outcome.message += ": " + line;
  }
  return outcome;
}

std::string failures_to_jsonl(std::span<const ToolFailure> failures) {
  std::string out;
  for (const auto& f : failures) {
    json j = {{"record", f.record},
              {"id", f.id},
              {"stage", f.stage},
              {"exit_code", f.exit_code},
              {"message", f.message}};
    out += j.dump() + "\n";
  }
  return out;
}

void write_failure_report(const fs::path& path, std::span<const ToolFailure> failures) {
  write_text_file(path, failures_to_jsonl(failures));
}

namespace {

// Runs job(i) for i in [0, n) on up to `concurrency` threads. Results are
// indexed by job so completion order does not matter.
std::vector<std::optional<ToolFailure>> dispatch(
    std::size_t n, int concurrency, const std::function<std::optional<ToolFailure>(std::size_t)>& job) {
  std::vector<std::optional<ToolFailure>> results(n);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) results[i] = job(i);
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, concurrency)));
  if (threads <= 1) {
    worker();
    return results;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

// One attempt plus max_retries; returns the last failure or nullopt.
std::optional<ToolFailure> attempt(const std::string& command, const fs::path& expected_output,
                                   const ExternalToolConfig& cfg, std::size_t index,
                                   const std::string& id, const char* stage) {
  ToolFailure failure{index, id, stage, 0, ""};
  for (int tries = 0; tries <= std::max(0, cfg.max_retries); ++tries) {
    std::error_code ec;
    fs::remove(expected_output, ec);
    const CommandOutcome out = run_command(command, cfg.timeout_s);
    if (out.ok()) {
      if (fs::exists(expected_output)) return std::nullopt;
      failure.exit_code = 0;
      failure.message = "missing output file " + expected_output.string();
    } else {
      failure.exit_code = out.exit_code;
      failure.message = out.message;
    }
  }
  return failure;
}

fs::path resolved(const std::string& p, const fs::path& base_dir) {
  fs::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

}  // namespace

TtsResult run_tts_jobs(const PairPlan& plan, std::span<const CohortItem> cohort,
                       const ExternalToolConfig& cfg, const fs::path& out_dir,
                       const fs::path& base_dir) {
  static constexpr std::string_view kNeeded[] = {"voice_audio", "text", "out"};
  require_placeholders(cfg.tts_command_template, kNeeded);
  check_plan(plan, cohort);
  std::unordered_map<std::string, const CohortItem*> by_id;
  for (const auto& item : cohort) by_id[item.id] = &item;

  struct Job {
    fs::path voice_audio, out;
    std::string text;
  };
  std::vector<Job> jobs;
  for (const auto& r : plan.records) {
    const CohortItem& voice = *by_id.at(r.voice_id);
    const CohortItem& donor = *by_id.at(r.transcript_id);
    Job job{resolved(voice.audio, base_dir), out_dir / (r.synth_id + ".wav"),
            read_transcript(donor, base_dir)};
    if (voice.audio.empty() || !fs::exists(job.voice_audio))
      throw DataError("voice audio for '" + voice.id + "' not found: " + job.voice_audio.string());
    jobs.push_back(std::move(job));
  }
  fs::create_directories(out_dir);

  const auto results = dispatch(jobs.size(), cfg.concurrency, [&](std::size_t i) {
    const std::string cmd = expand_template(
        cfg.tts_command_template,
        {{"voice_audio", jobs[i].voice_audio.string()}, {"text", jobs[i].text}, {"out", jobs[i].out.string()}});
    return attempt(cmd, jobs[i].out, cfg, i, plan.records[i].synth_id, "tts");
  });

  TtsResult result;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i]) {
      result.failures.push_back(*results[i]);
      continue;
    }
    const PairRecord& r = plan.records[i];
    CohortItem item;
    item.id = r.synth_id;
    item.label = r.label;
    item.audio = jobs[i].out.string();
    item.text = jobs[i].text;
    item.source = Source::kSynthetic;
    item.voice_of = r.voice_id;
    item.transcript_of = r.transcript_id;
    item.subject = by_id.at(r.voice_id)->subject_key();
    result.items.push_back(std::move(item));
  }
  return result;
}

AsrResult run_asr_jobs(std::span<const CohortItem> items, const ExternalToolConfig& cfg,
                       const fs::path& out_dir, const fs::path& base_dir) {
  static constexpr std::string_view kNeeded[] = {"audio", "out"};
  require_placeholders(cfg.asr_command_template, kNeeded);
  for (const auto& item : items) {
    const fs::path audio = resolved(item.audio, base_dir);
    if (item.audio.empty() || !fs::exists(audio))
      throw DataError("audio for '" + item.id + "' not found: " + audio.string());
  }
  fs::create_directories(out_dir);

  const auto results = dispatch(items.size(), cfg.concurrency, [&](std::size_t i) {
    const fs::path raw = out_dir / (items[i].id + ".raw.txt");
    const std::string cmd =
        expand_template(cfg.asr_command_template,
                        {{"audio", resolved(items[i].audio, base_dir).string()}, {"out", raw.string()}});
    return attempt(cmd, raw, cfg, i, items[i].id, "asr");
  });

  AsrResult result;
  for (std::size_t i = 0; i < items.size(); ++i) {
    CohortItem item = items[i];
    if (results[i]) {
      result.failures.push_back(*results[i]);
      item.valid = false;
    } else {
      const std::string cleaned = clean_transcript(read_text_file(out_dir / (item.id + ".raw.txt")));
      const fs::path clean_path = out_dir / (item.id + ".txt");
      write_text_file(clean_path, cleaned);
      item.transcript = clean_path.string();
      item.text.clear();
      item.valid = !cleaned.empty();
    }
    result.items.push_back(std::move(item));
  }
  return result;
}

std::string AugmentedManifest::summary_json() const {
  json classes = json::object();
  for (const auto& [label, b] : balance) {
    classes[std::string(to_string(label))] = {
        {"real", b.real},
        {"synthetic", b.synthetic},
        {"synthetic_per_real", b.real ? static_cast<double>(b.synthetic) / static_cast<double>(b.real) : 0.0}};
  }
  json j = {{"total", items.size()}, {"dropped_invalid", dropped_invalid}, {"classes", classes}};
  return j.dump(2);
}

AugmentedManifest merge_augmented(std::span<const CohortItem> real,
                                  std::span<const CohortItem> synthetic) {
  AugmentedManifest out;
  std::set<std::string> ids;
  out.balance[Label::kAD];
  out.balance[Label::kCN];
  const auto take = [&](const CohortItem& item) {
    if (!ids.insert(item.id).second) throw DataError("duplicate id '" + item.id + "' in merge");
    check_provenance(item);
    if (!item.valid) {
      ++out.dropped_invalid;
      return;
    }
    auto& b = out.balance[item.label];
    (item.source == Source::kReal ? b.real : b.synthetic)++;
    out.items.push_back(item);
  };
  for (const auto& item : real) take(item);
  for (const auto& item : synthetic) take(item);
  return out;
}

}  // namespace motas
