#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "gcl/corrector.hpp"
#include "gcl/error.hpp"
#include "gcl/format.hpp"
#include "gcl/service.hpp"
#include "gcl/toolpath.hpp"

namespace fs = std::filesystem;
using namespace gcl;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

struct Exit {
  int code;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
}

TaskParameters read_params(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parameters_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << path << ": " << e.what() << "\n";
    throw Exit{kUsage};
  } catch (const Error& e) {
    std::cerr << "error: " << path << ": " << e.what() << "\n";
    throw Exit{kUsage};
  }
}

int cmd_validate(const std::string& file, const std::string& registry_file, double safe_height, bool drilling) {
  const CommandRegistry registry =
      registry_file.empty() ? CommandRegistry::standard() : CommandRegistry::parse(read_file(registry_file));
  SafetyConfig safety;
  safety.safe_height = safe_height;
  const auto report = validate(parse_program(read_file(file)), registry, safety,
                               drilling ? Operation::Drilling : Operation::Milling);
  for (const auto& d : report.diagnostics) std::cout << format_diagnostic(d) << "\n";
  if (report.passed) std::cout << "OK\n";
  return report.passed ? kOk : kFailed;
}

int cmd_simulate(const std::string& file, const std::string& svg, const std::string& json_out, double chord_tol) {
  const auto program = parse_program(read_file(file));
  Toolpath path;
  try {
    if (!has_motion(program)) throw Error(ErrorCode::EmptyPath, "program has no motion");
    path = interpret(program, {chord_tol});
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kFailed;
  }
  if (!svg.empty()) {
    std::string drawing;
    try {
      const std::vector<NamedPath> paths = {{"gcode", path}};
      drawing = render_svg(paths);
    } catch (const Error& e) {
      std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
      return kFailed;
    }
    write_file(svg, drawing);
  }
  if (!json_out.empty()) write_file(json_out, to_json(path).dump(2) + "\n");
  std::cout << path.points.size() << " points, " << path.count(SegmentKind::Feed) << " feed segments, "
            << path.count(SegmentKind::Rapid) << " rapid segments\n";
  return kOk;
}

int cmd_compare(const std::string& file, const std::string& params_file, double tolerance) {
  const std::string text = read_file(file);
  const TaskParameters params = read_params(params_file);
  try {
    const auto r = validate_functional(text, params, tolerance);
    std::cout << r.message << "\n" << "d=" << format_fixed(r.distance, 6) << "\n";
    return r.matched ? kOk : kFailed;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kFailed;
  }
}

std::unique_ptr<Generator> make_generator(const std::string& kind, const std::vector<std::string>& faults) {
  if (kind == "template") return std::make_unique<TemplateGenerator>();
  if (kind == "remote") return std::make_unique<RemoteGenerator>(EndpointConfig::from_env());
  if (kind == "fault") {
    std::vector<FaultKind> script;
    for (const auto& f : faults) script.push_back(parse_fault(f));
    return std::make_unique<FaultInjectingGenerator>(script);
  }
  throw Exit{kUsage};
}

int cmd_generate(const std::string& params_file, const std::string& kind, const std::vector<std::string>& faults,
                 int max_iter, const std::string& out, const std::string& trace) {
  const TaskParameters params = read_params(params_file);
  const auto missing = find_missing(params);
  if (!missing.empty()) {
    std::cerr << "error: missing parameters:";
    for (const auto& m : missing) std::cerr << " " << m;
    std::cerr << "\n";
    return kUsage;
  }
  LoopConfig config;
  config.max_iterations = max_iter;
  auto generator = make_generator(kind, faults);
  const LoopResult result = run_loop(params, *generator, config);
  if (!trace.empty()) write_file(trace, to_json(result).dump(2) + "\n");
  std::cerr << (result.success ? "success" : "failure") << " after " << result.iterations_used << " iteration(s)";
  if (auto d = result.final_distance()) std::cerr << ", d=" << format_fixed(*d, 6);
  std::cerr << "\n";
  if (!result.success) {
    if (!result.trace.empty()) std::cerr << result.trace.back().feedback << "\n";
    return kFailed;
  }
  if (out.empty()) {
    std::cout << *result.final_gcode << "\n";
  } else {
    write_file(out, *result.final_gcode + "\n");
  }
  return kOk;
}

int cmd_decompose(const std::string& description) {
  if (description.find_first_not_of(" \t\r\n") == std::string::npos) {
    std::cerr << "error: description is empty\n";
    return kUsage;
  }
  for (const auto& s : decompose(description)) std::cout << s.index << ". " << s.text << "\n";
  return kOk;
}

int cmd_bench(const std::string& dir, int runs, const std::string& kind, const std::vector<std::string>& faults,
              int max_iter, const std::string& csv) {
  if (runs < 1) {
    std::cerr << "error: --runs must be at least 1\n";
    return kUsage;
  }
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  if (ec) throw Error(ErrorCode::Io, "cannot list '" + dir + "'");
  if (files.empty()) {
    std::cerr << "error: no task files in " << dir << "\n";
    return kUsage;
  }
  std::sort(files.begin(), files.end());
  std::vector<BenchmarkTask> tasks;
  for (const auto& f : files) tasks.push_back({f.stem().string(), read_params(f.string())});
  LoopConfig config;
  config.max_iterations = max_iter;
  auto generator = make_generator(kind, faults);
  const auto result = run_benchmark(tasks, *generator, config, runs);
  write_file(csv, result.to_csv());
  for (const auto& t : tasks) {
    std::cout << t.name << ": avg_iterations=" << format_fixed(result.avg_iterations_for(t.name), 2) << "\n";
  }
  std::cout << "success_rate=" << format_fixed(result.success_rate, 3)
            << " avg_iterations=" << format_fixed(result.avg_iterations, 3) << "\n";
  return kOk;
}

int cmd_serve(const std::string& host, int port, int ttl) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ServiceConfig config;
  config.ttl = std::chrono::seconds(ttl);
  SessionService service(config);
  HttpServer server(service);
  if (!server.bind(host, port)) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return kIo;
  }
  std::cout << "listening on http://" << host << ":" << server.port() << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  // listen() can also end without a signal; wake the waiter so it can exit.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cout << "stopped" << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G-code generation, validation and comparison toolkit"};
  app.require_subcommand(1);

  std::string file, registry, svg, json_out, params, generator = "template", out, trace, description, tasks, csv,
                                                       host = "127.0.0.1";
  double safe_height = 2.0, tolerance = 0.5, chord_tol = kDefaultChordTolerance;
  bool drilling = false;
  int max_iter = 5, runs = 5, port = 8080, ttl = 3600;
  std::vector<std::string> faults;

  auto* validate_cmd = app.add_subcommand("validate", "Check syntax, reachability and safety");
  validate_cmd->add_option("file", file)->required();
  validate_cmd->add_option("--registry", registry, "Command registry file");
  validate_cmd->add_option("--safe-height", safe_height, "Safe height in mm");
  validate_cmd->add_flag("--drilling", drilling, "Apply the drilling check");

  auto* simulate_cmd = app.add_subcommand("simulate", "Interpret a program into its XY tool path");
  simulate_cmd->add_option("file", file)->required();
  simulate_cmd->add_option("--svg", svg);
  simulate_cmd->add_option("--json", json_out);
  simulate_cmd->add_option("--chord-tol", chord_tol);

  auto* compare_cmd = app.add_subcommand("compare", "Hausdorff comparison with the task path");
  compare_cmd->add_option("file", file)->required();
  compare_cmd->add_option("--params", params)->required();
  compare_cmd->add_option("--tolerance", tolerance);

  auto* generate_cmd = app.add_subcommand("generate", "Run the self-correcting generation loop");
  generate_cmd->add_option("--params", params)->required();
  generate_cmd->add_option("--generator", generator)->check(CLI::IsMember({"template", "remote", "fault"}));
  generate_cmd->add_option("--faults", faults, "Fault script for the fault generator")->delimiter(',');
  generate_cmd->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
  generate_cmd->add_option("--out", out);
  generate_cmd->add_option("--trace", trace);

  auto* decompose_cmd = app.add_subcommand("decompose", "Split a multi-shape description");
  decompose_cmd->add_option("--description", description)->required();

  auto* bench_cmd = app.add_subcommand("bench", "Success rate and iterations over task files");
  bench_cmd->add_option("--tasks", tasks)->required();
  bench_cmd->add_option("--runs", runs);
  bench_cmd->add_option("--generator", generator)->check(CLI::IsMember({"template", "remote", "fault"}));
  bench_cmd->add_option("--faults", faults)->delimiter(',');
  bench_cmd->add_option("--max-iter", max_iter)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--csv", csv)->required();

  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--ttl", ttl, "Session TTL in seconds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate(file, registry, safe_height, drilling);
    if (simulate_cmd->parsed()) return cmd_simulate(file, svg, json_out, chord_tol);
    if (compare_cmd->parsed()) return cmd_compare(file, params, tolerance);
    if (generate_cmd->parsed()) return cmd_generate(params, generator, faults, max_iter, out, trace);
    if (decompose_cmd->parsed()) return cmd_decompose(description);
    if (bench_cmd->parsed()) return cmd_bench(tasks, runs, generator, faults, max_iter, csv);
    if (serve_cmd->parsed()) return cmd_serve(host, port, ttl);
  } catch (const Exit& e) {
    return e.code;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidValue || e.code() == ErrorCode::PreconditionFailed ? kUsage : kIo;
  }
  return kUsage;
}
