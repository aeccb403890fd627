// Copyright 2025 The ozmul authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "ozmul/generators.hpp"
#include "ozmul/io.hpp"

using namespace ozmul;

namespace {

std::string temp_dir() {
  static std::string dir = [] {
    std::string d = "/tmp/ozmul_cli_test_XXXXXX";
    char buf[64];
    snprintf(buf, sizeof buf, "%s", d.c_str());
    if (!mkdtemp(buf)) throw std::runtime_error("mkdtemp failed");
    return std::string(buf);
  }();
  return dir;
}

int run(const std::string& args) {
  std::string cmd = std::string(OZMUL_BIN) + " " + args + " > " + temp_dir() +
                    "/stdout.txt 2>" + temp_dir() + "/stderr.txt";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string captured_stdout() { return read_file(temp_dir() + "/stdout.txt"); }

}  // namespace

TEST_CASE("matrix files round-trip bit-for-bit in both formats") {
  Matrix m(3, 2);
  m(0, 0) = 0.1;
  m(0, 1) = -72.20654296875;
  m(1, 0) = 0x1p-1074;  // smallest subnormal
  m(1, 1) = 1e308;
  m(2, 0) = 0.0;
  m(2, 1) = 3.0000000000000004;
  for (MatrixFormat fmt : {MatrixFormat::kHex, MatrixFormat::kDec}) {
    std::string path = temp_dir() + "/roundtrip.ozm";
    write_matrix_file(path, m, fmt);
    Matrix back = read_matrix_file(path, fmt);
    REQUIRE(back == m);
  }
}

TEST_CASE("matrix reader rejects malformed input") {
  std::istringstream missing_header("3 2\n0 0");
  CHECK_THROWS(read_matrix(missing_header, MatrixFormat::kHex));
  std::istringstream truncated("ozm1 2 2\n3ff0000000000000");
  CHECK_THROWS(read_matrix(truncated, MatrixFormat::kHex));
  std::istringstream bad_hex("ozm1 1 1\nzzzz000000000000");
  CHECK_THROWS(read_matrix(bad_hex, MatrixFormat::kHex));
}

TEST_CASE("sweep grammar") {
  CHECK(parse_int_sweep("1:4") == std::vector<long long>{1, 2, 3, 4});
  CHECK(parse_int_sweep("0:10:30") == std::vector<long long>{0, 10, 20, 30});
  CHECK(parse_int_sweep("{3,9,27}") == std::vector<long long>{3, 9, 27});
  CHECK(parse_int_sweep("7") == std::vector<long long>{7});
  CHECK(parse_double_sweep("{1e10,1e20}") == std::vector<double>{1e10, 1e20});
  CHECK_THROWS(parse_double_sweep(""));
  CHECK_THROWS(parse_double_sweep("{1,2"));
  CHECK_THROWS(parse_double_sweep("1:0:5"));
}

TEST_CASE("multiply subcommand reproduces the worked example") {
  std::string dir = temp_dir();
  {
    std::ofstream a(dir + "/a.ozm");
    a << "ozm1 1 3\n3ff9000000000000 4020000000000000 c00d800000000000\n";
    std::ofstream b(dir + "/b.ozm");
    b << "ozm1 3 1\n3ff6200000000000\nc01e800000000000\n400d000000000000\n";
  }
  int code = run("multiply --a " + dir + "/a.ozm --b " + dir + "/b.ozm --out " + dir +
                 "/c.ozm --t-in 3 --sa 4 --sb 4 --schedule full --exact --verify "
                 "--record " + dir + "/rec.json");
  CHECK(code == 0);
  Matrix c = read_matrix_file(dir + "/c.ozm", MatrixFormat::kHex);
  CHECK(c(0, 0) == -72.20654296875);
  CHECK(captured_stdout().find("verify: ok") != std::string::npos);
  std::string record = read_file(dir + "/rec.json");
  CHECK(record.find("\"products\": 16") != std::string::npos);
  CHECK(record.find("max_elementwise_error") != std::string::npos);

  // The reduced schedule drops the deep products.
  code = run("multiply --a " + dir + "/a.ozm --b " + dir + "/b.ozm --out " + dir +
             "/c2.ozm --t-in 3 --sa 4 --sb 4 --schedule reduced");
  CHECK(code == 0);
  Matrix c2 = read_matrix_file(dir + "/c2.ozm", MatrixFormat::kHex);
  CHECK(c2(0, 0) == -72.21875);
}

TEST_CASE("multiply reports capacity violations with the limit") {
  std::string dir = temp_dir();
  Matrix a(1, 1 << 18, 1.0);
  Matrix b(1 << 18, 1, 1.0);
  write_matrix_file(dir + "/big_a.ozm", a, MatrixFormat::kHex);
  write_matrix_file(dir + "/big_b.ozm", b, MatrixFormat::kHex);
  int code = run("multiply --a " + dir + "/big_a.ozm --b " + dir + "/big_b.ozm "
                 "--out " + dir + "/bad.ozm --t-acc 17");
  CHECK(code == 2);
  std::string err = read_file(dir + "/stderr.txt");
  CHECK(err.find("error") != std::string::npos);
}

TEST_CASE("missing files exit with the I/O code") {
  CHECK(run("multiply --a /no/such/file --b /no/such/file --out /tmp/x.ozm") == 1);
  CHECK(run("experiment bogus") == 1);
}

TEST_CASE("analyze reports scaling and auto-selection") {
  std::string dir = temp_dir();
  write_matrix_file(dir + "/u1.ozm", random_uniform(12, 12, 7), MatrixFormat::kHex);
  write_matrix_file(dir + "/u2.ozm", random_uniform(12, 12, 8), MatrixFormat::kHex);
  int code = run("analyze --a " + dir + "/u1.ozm --b " + dir + "/u2.ozm --auto");
  CHECK(code == 0);
  std::string out = captured_stdout();
  CHECK(out.find("kappa_A") != std::string::npos);
  CHECK(out.find("selected slices") != std::string::npos);

  // A hopelessly scaled pair within a tiny search box is infeasible.
  Matrix bad(2, 2, 1.0);
  bad(0, 0) = 0x1p-400;
  bad(1, 1) = 0x1p400;
  write_matrix_file(dir + "/bad.ozm", bad, MatrixFormat::kHex);
  code = run("analyze --a " + dir + "/bad.ozm --b " + dir + "/bad.ozm --auto "
             "--s-max 8");
  CHECK(code == 2);
}

TEST_CASE("experiment emits deterministic tables with a verify pass") {
  std::string dir = temp_dir();
  int code = run("experiment inner --phi {0,20} --s 1:6 --seeds 5 --seed 42 "
                 "--verify --out " + dir + "/tab");
  CHECK(code == 2);  // some rows fail the accuracy threshold by design
  CHECK(captured_stdout().find("verify: ok") != std::string::npos);
  std::string first = read_file(dir + "/tab.csv");
  CHECK(first.find("phi,s,strategy") == 0);
  code = run("experiment inner --phi {0,20} --s 1:6 --seeds 5 --seed 42 --out " +
             dir + "/tab2");
  CHECK(code == 2);
  CHECK(read_file(dir + "/tab2.csv") == first);
}

TEST_CASE("thread cap changes nothing about the results") {
  std::string dir = temp_dir();
  int code = std::system((std::string("OZMUL_THREADS=1 ") + OZMUL_BIN +
                          " experiment matmul --phi {0,4} --s {2,6} --k 24 "
                          "--strategy all --seed 9 --out " + dir + "/t1 > /dev/null")
                             .c_str());
  CHECK(WEXITSTATUS(code) == 2);
  code = std::system((std::string("OZMUL_THREADS=8 ") + OZMUL_BIN +
                      " experiment matmul --phi {0,4} --s {2,6} --k 24 "
                      "--strategy all --seed 9 --out " + dir + "/t2 > /dev/null")
                         .c_str());
  CHECK(WEXITSTATUS(code) == 2);
  CHECK(read_file(dir + "/t1.csv") == read_file(dir + "/t2.csv"));
  CHECK(!read_file(dir + "/t1.csv").empty());
}
