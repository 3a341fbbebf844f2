#include "sbmh/cli/checkpoint.hpp"

#include "sbmh/error.hpp"

#include <cstdio>
#include <fstream>

namespace sbmh::cli {

namespace {

Json dense_json(const ndiff::Dense& d) {
  Json j;
  j["in"] = d.in();
  j["out"] = d.out();
  j["weight"] = std::vector<double>(d.weight.data(), d.weight.data() + d.weight.size());
  j["bias"] = std::vector<double>(d.bias.data(), d.bias.data() + d.bias.size());
  return j;
}

void load_dense(const Json& j, ndiff::Dense& d) {
  if (j.at("in").get<Eigen::Index>() != d.in() || j.at("out").get<Eigen::Index>() != d.out()) {
    throw ParseError("checkpoint layer shape " + std::to_string(j.at("out").get<long>()) + "x" +
                     std::to_string(j.at("in").get<long>()) + " does not match the architecture (" +
                     std::to_string(d.out()) + "x" + std::to_string(d.in()) + ")");
  }
  const auto w = j.at("weight").get<std::vector<double>>();
  const auto b = j.at("bias").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(w.size()) != d.weight.size() ||
      static_cast<Eigen::Index>(b.size()) != d.bias.size()) {
    throw ParseError("checkpoint layer has the wrong number of parameters");
  }
  std::copy(w.begin(), w.end(), d.weight.data());
  std::copy(b.begin(), b.end(), d.bias.data());
}

template <class Net>
void load_layers(const Json& j, Net& net) {
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers().size()) {
    throw ParseError("checkpoint has " + std::to_string(layers.size()) + " layers, architecture needs " +
                     std::to_string(net.layers().size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) load_dense(layers[i], net.layers()[i]);
}

void check_header(const Json& j, const std::string& kind) {
  if (j.value("format", "") != "sbmh-checkpoint") throw ParseError("not an sbmh checkpoint");
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  }
  if (j.value("kind", "") != kind) {
    throw ParseError("expected a " + kind + " checkpoint, found '" + j.value("kind", "") + "'");
  }
}

template <class F>
auto with_path(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

std::string config_hash(const Json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed on " + path.string());
}

Json to_json(const ndiff::ScoreNet& net) {
  Json j;
  j["architecture"] = {{"type", "score_net"},
                       {"dim", net.dim()},
                       {"hidden", net.hidden()},
                       {"hidden_layers", net.hidden_layers()},
                       {"activation", "softplus"}};
  for (const auto& d : net.layers()) j["layers"].push_back(dense_json(d));
  return j;
}

Json to_json(const ndiff::AcceptanceNet& net) {
  Json j;
  j["architecture"] = {{"type", "acceptance_net"},
                       {"dim", net.dim()},
                       {"hidden", net.hidden()},
                       {"blocks", net.blocks()},
                       {"activation", "gelu"},
                       {"output", "sigmoid"}};
  for (const auto& d : net.layers()) j["layers"].push_back(dense_json(d));
  return j;
}

ndiff::ScoreNet score_net_from_json(const Json& j) {
  const auto& a = j.at("architecture");
  ndiff::ScoreNet net(a.at("dim").get<int>(), a.at("hidden").get<int>(),
                      a.at("hidden_layers").get<int>());
  load_layers(j, net);
  return net;
}

ndiff::AcceptanceNet acceptance_net_from_json(const Json& j) {
  const auto& a = j.at("architecture");
  ndiff::AcceptanceNet net(a.at("dim").get<int>(), a.at("hidden").get<int>(),
                           a.at("blocks").get<int>());
  load_layers(j, net);
  return net;
}

void save_checkpoint(const std::filesystem::path& path, const ScoreCheckpoint& c) {
  Json j = to_json(c.net);
  j["format"] = "sbmh-checkpoint";
  j["version"] = kCheckpointVersion;
  j["kind"] = "score";
  j["training"] = c.training;
  write_json(path, j);
}

void save_checkpoint(const std::filesystem::path& path, const AcceptanceCheckpoint& c) {
  Json j = to_json(c.net);
  j["format"] = "sbmh-checkpoint";
  j["version"] = kCheckpointVersion;
  j["kind"] = "acceptance";
  j["proposal"] = {{"kind", proposal::to_string(c.proposal)}, {"parameter", c.proposal_parameter}};
  j["score_checkpoint"] = c.score_checkpoint;
  j["training"] = c.training;
  write_json(path, j);
}

ScoreCheckpoint load_score_checkpoint(const std::filesystem::path& path) {
  const Json j = read_json(path);
  return with_path(path, [&] {
    check_header(j, "score");
    return ScoreCheckpoint{score_net_from_json(j), j.value("training", Json::object())};
  });
}

AcceptanceCheckpoint load_acceptance_checkpoint(const std::filesystem::path& path) {
  const Json j = read_json(path);
  return with_path(path, [&] {
    check_header(j, "acceptance");
    AcceptanceCheckpoint c;
    c.net = acceptance_net_from_json(j);
    c.proposal = proposal::parse_kind(j.at("proposal").at("kind").get<std::string>());
    c.proposal_parameter = j.at("proposal").at("parameter").get<double>();
    c.score_checkpoint = j.value("score_checkpoint", "");
    c.training = j.value("training", Json::object());
    return c;
  });
}

}  // namespace sbmh::cli
