// Line-delimited JSON model server backed by the mock handlers. Reads one
// request per stdin line, or serves HTTP POST with --http.
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>

#include "uvkit/gateway/mock.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mock segmentation/embedding/refiner backend"};
  uvkit::gateway::MockServerOptions opt;
  std::string workdir = ".";
  int http_port = 0;
  app.add_option("--workdir", workdir, "Directory for raster replies");
  app.add_option("--value", opt.segment_value, "Constant segmentation probability");
  app.add_option("--confidence", opt.refine_confidence, "Refiner confidence");
  app.add_option("--embed-rows", opt.embed_rows);
  app.add_option("--embed-cols", opt.embed_cols);
  app.add_option("--seed", opt.seed);
  app.add_option("--http", http_port, "Serve HTTP on this port instead of stdin/stdout");
  CLI11_PARSE(app, argc, argv);
  opt.workdir = workdir;

  auto handle = [&](const std::string& line) {
    try {
      return uvkit::gateway::handle_mock_message(nlohmann::json::parse(line), opt).dump();
    } catch (const std::exception& e) {
      return nlohmann::json{{"error", e.what()}}.dump();
    }
  };

  if (http_port > 0) {
    httplib::Server srv;
    srv.Post(".*", [&](const httplib::Request& req, httplib::Response& res) {
      res.set_content(handle(req.body) + "\n", "application/x-ndjson");
    });
    return srv.listen("127.0.0.1", http_port) ? 0 : 1;
  }

  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    std::cout << handle(line) << '\n' << std::flush;
  }
  return 0;
}
