#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tablevc/cli.hpp"
#include "tablevc/csv.hpp"
#include "tablevc/error.hpp"
#include "test_util.hpp"

using namespace tablevc;

TEST(Csv, QuotingAndNulls) {
  auto recs = parse_csv("a,b,c\n1,\"x,y\",\n\n2,\"\",\"he said \"\"hi\"\"\"\r\n");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[1][1].text, "x,y");
  EXPECT_FALSE(recs[1][2].quoted);
  EXPECT_TRUE(recs[2][1].quoted);
  EXPECT_EQ(recs[2][2].text, "he said \"hi\"");
  EXPECT_THROW(parse_csv("a,\"open\n"), Error);
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("q\""), "\"q\"\"\"");
  EXPECT_EQ(csv_value(Value{std::string("")}), "\"\"");
  EXPECT_EQ(csv_value(std::monostate{}), "");
}

TEST(Csv, RowsByHeader) {
  auto schema = tvtest::kv_schema(false);
  auto rows = rows_from_csv("v,k\nx,1\n,2\n\"\",3\n", schema);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(rows_equal(rows[0], tvtest::kv(1, "x")));
  EXPECT_TRUE(is_null(rows[1][1]));
  EXPECT_EQ(std::get<std::string>(rows[2][1]), "");
  EXPECT_THROW(rows_from_csv("k\n1\n", schema), Error);
  EXPECT_THROW(rows_from_csv("k,v\nnope,x\n", schema), Error);
  auto tuples = tuples_from_csv("k\n4\n5\n", {"k"}, {ColumnType::Int64});
  ASSERT_EQ(tuples.size(), 2u);
}

namespace {

struct Cli : ::testing::Test {
  tvtest::TempDir dir;
  std::string repo = (dir / "repo").string();

  int run(std::vector<std::string> args, std::string* out = nullptr) {
    std::ostringstream o, e;
    args.insert(args.begin(), {"--repo", repo});
    int rc = run_cli(args, o, e);
    if (out) *out = o.str();
    last_err = e.str();
    return rc;
  }
  std::string file(const std::string& name, const std::string& text) {
    auto p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string last_err;
};

}  // namespace

TEST_F(Cli, Workflow) {
  std::string out;
  ASSERT_EQ(run({"init"}), 0);
  ASSERT_EQ(run({"create-table", "T", "-c", "a:int64", "-c", "b:string", "--pk", "a"}), 0);
  ASSERT_EQ(run({"insert", "T", "--csv", file("t.csv", "a,b\n1,a\n2,b\n3,c\n")}), 0);
  ASSERT_EQ(run({"snapshot", "create", "T", "sn1"}), 0);
  ASSERT_EQ(run({"clone", "T@sn1", "TClone"}), 0);
  ASSERT_EQ(run({"update", "TClone", "--where", "a=2", "--set", "b=x"}), 0);
  ASSERT_EQ(run({"diff", "T", "TClone"}, &out), 0);
  EXPECT_EQ(out, "diff_cnt,a,b\n-1,2,b\n1,2,x\n");
  ASSERT_EQ(run({"--format", "jsonl", "diff", "T", "TClone", "--path", "fallback"}, &out), 0);
  auto first = nlohmann::json::parse(out.substr(0, out.find('\n')));
  EXPECT_EQ(first["diff_cnt"], -1);
  ASSERT_EQ(run({"merge", "T", "--from", "TClone"}, &out), 0);
  auto rep = nlohmann::json::parse(out);
  EXPECT_EQ(rep["true_conflicts"], 0);
  ASSERT_EQ(run({"scan", "T"}, &out), 0);
  EXPECT_EQ(out, "a,b\n1,a\n2,x\n3,c\n");
  ASSERT_EQ(run({"scan", "T@sn1"}, &out), 0);
  EXPECT_EQ(out, "a,b\n1,a\n2,b\n3,c\n");

  ASSERT_EQ(run({"update", "T", "--keys", file("k.csv", "a\n1\n"), "--set", "b=t"}), 0);
  ASSERT_EQ(run({"update", "TClone", "--where", "a=1", "--set", "b=c"}), 0);
  ASSERT_EQ(run({"scan", "T"}, &out), 0);
  auto before = out;
  EXPECT_EQ(run({"merge", "T", "--from", "TClone"}, &out), 2);
  EXPECT_EQ(nlohmann::json::parse(out)["true_conflicts"], 1);
  ASSERT_EQ(run({"scan", "T"}, &out), 0);
  EXPECT_EQ(out, before);
  ASSERT_EQ(run({"merge", "T", "--from", "TClone", "--on-conflict", "accept"}), 0);
  ASSERT_EQ(run({"scan", "T"}, &out), 0);
  EXPECT_EQ(out, "a,b\n1,c\n2,x\n3,c\n");

  ASSERT_EQ(run({"compact", "T"}), 0);
  ASSERT_EQ(run({"gc", "--dry-run"}), 0);
  ASSERT_EQ(run({"gc"}), 0);
  ASSERT_EQ(run({"snapshot", "list", "T"}, &out), 0);
  EXPECT_NE(out.find("sn1"), std::string::npos);
  ASSERT_EQ(run({"restore", "T", "T@sn1"}), 0);
  ASSERT_EQ(run({"scan", "T"}, &out), 0);
  EXPECT_EQ(out, "a,b\n1,a\n2,b\n3,c\n");
  ASSERT_EQ(run({"tables"}, &out), 0);
  EXPECT_NE(out.find("TClone"), std::string::npos);
}

TEST_F(Cli, NoKeyRowsByUniquifier) {
  std::string out;
  ASSERT_EQ(run({"init"}), 0);
  ASSERT_EQ(run({"create-table", "N", "-c", "a:int64", "-c", "b:string"}), 0);
  ASSERT_EQ(run({"insert", "N", "--csv", file("n.csv", "a,b\n1,r\n1,r\n")}), 0);
  ASSERT_EQ(run({"scan", "N", "--row-ids"}, &out), 0);
  std::istringstream in(out);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "_row,a,b");
  std::getline(in, line);
  auto row = line.substr(0, line.find(','));
  ASSERT_EQ(run({"delete", "N", "--keys", file("d.csv", "_row\n" + row + "\n")}), 0);
  ASSERT_EQ(run({"scan", "N"}, &out), 0);
  EXPECT_EQ(out, "a,b\n1,r\n");
}

TEST_F(Cli, ErrorsAndExitCodes) {
  EXPECT_EQ(run({"tables"}), 1);
  ASSERT_EQ(run({"init"}), 0);
  EXPECT_EQ(run({"scan", "missing"}), 1);
  EXPECT_NE(last_err.find("missing"), std::string::npos);
  EXPECT_EQ(run({"create-table", "T", "-c", "a:decimal"}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  ASSERT_EQ(run({"create-table", "T", "-c", "a:int64", "--pk", "a"}), 0);
  EXPECT_EQ(run({"insert", "T", "--csv", file("bad.csv", "a\n1\n1\n")}), 1);
  EXPECT_EQ(run({"scan", "T@nosuch"}), 1);
}
