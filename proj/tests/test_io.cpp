#include <doctest.h>

#include <filesystem>
#include <functional>
#include <unistd.h>
#include <fstream>
#include <random>
#include <sstream>

#include "hocroute/io.hpp"
#include "hocroute/synthetic.hpp"

using namespace hocroute;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("hocroute_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const InvalidInput& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("records parse into examples") {
    const auto ex = io::parse_record(R"({"id":"r1","weak_probs":[0.4,0.6],"labels":[0,0,1]})", 1, 2);
    CHECK(ex.id == "r1");
    CHECK(ex.snapshot_mean[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(ex.snapshot_mean[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_FALSE(ex.features.has_value());

    const auto near = io::parse_record(R"({"id":"r","weak_probs":[0.5000005,0.5],"labels":[1]})", 1, 2);
    CHECK(near.weak_pred[0] + near.weak_pred[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("malformed records name the line and field") {
    std::istringstream in(
        "{\"id\":\"a\",\"weak_probs\":[0.5,0.5],\"labels\":[0]}\n"
        "\n"
        "{\"id\":\"b\",\"weak_probs\":[0.5,0.4],\"labels\":[0]}\n");
    const auto msg = message_of([&] { io::ingest(in, 2); });
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("weak_probs") != std::string::npos);

    CHECK(message_of([] { io::parse_record(R"({"id":"a","weak_probs":[0.5,0.5],"labels":[]})", 4, 2); })
              .find("line 4, field 'labels'") != std::string::npos);
    CHECK(message_of([] { io::parse_record(R"({"id":"a","weak_probs":[0.5,0.5],"labels":[2]})", 2, 2); })
              .find("labels") != std::string::npos);
    CHECK(message_of([] { io::parse_record(R"({"id":"a","weak_probs":[1.0],"labels":[0]})", 2, 2); })
              .find("weak_probs") != std::string::npos);
    CHECK(message_of([] { io::parse_record(R"({"weak_probs":[0.5,0.5],"labels":[0]})", 9, 2); })
              .find("line 9, field 'id'") != std::string::npos);
    CHECK(message_of([] { io::parse_record("{not json", 5, 2); }).find("line 5") != std::string::npos);
    CHECK(message_of([] { io::parse_record(R"({"id":"a","weak_probs":[0.5,0.5],"labels":[0.5]})", 1, 2); })
              .find("labels") != std::string::npos);

    std::istringstream dup("{\"id\":\"a\",\"weak_probs\":[0.5,0.5],\"labels\":[0]}\n"
                           "{\"id\":\"a\",\"weak_probs\":[0.5,0.5],\"labels\":[1]}\n");
    CHECK(message_of([&] { io::ingest(dup, 2); }).find("duplicate") != std::string::npos);
}

TEST_CASE("datasets round-trip through files") {
    synthetic::SyntheticOptions opt;
    opt.calibration_size = 500;
    opt.test_size = 500;
    const auto data = synthetic::generate(opt);
    const auto path = scratch("test.jsonl");
    io::write_dataset(path, data.test, {2, {"neg", "pos"}});
    const auto header = io::read_header(path);
    CHECK(header.num_classes == 2);
    CHECK(header.class_names == std::vector<std::string>{"neg", "pos"});
    const auto back = io::ingest(path);
    REQUIRE(back.size() == data.test.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].id == data.test[i].id);
        CHECK(back[i].snapshot_mean == data.test[i].snapshot_mean);
        CHECK(back[i].weak_pred == data.test[i].weak_pred);
        CHECK(back[i].p_star == data.test[i].p_star);
        CHECK(*back[i].features == *data.test[i].features);
    }
}

TEST_CASE("headers are versioned") {
    const auto path = scratch("bad.jsonl");
    io::write_file(path, "");
    io::write_file(io::header_path(path), R"({"format":"something","version":1,"num_classes":2})");
    CHECK_THROWS_AS(io::ingest(path), InvalidInput);
    io::write_file(io::header_path(path), R"({"format":"hocroute-dataset","version":9,"num_classes":2})");
    CHECK_THROWS_AS(io::ingest(path), InvalidInput);
    io::write_file(io::header_path(path), R"({"format":"hocroute-dataset","version":1,"num_classes":2})");
    CHECK(io::ingest(path).empty());
}

TEST_CASE("models round-trip bit-exactly") {
    synthetic::SyntheticOptions opt;
    opt.test_size = 10;
    const auto data = synthetic::generate(opt);
    for (const auto& request : {PartitionRequest{PartitionKind::TopClassQuantile, 10, 0},
                                PartitionRequest{PartitionKind::Feature1DQuantile, 8, 0},
                                PartitionRequest{PartitionKind::LevelSet, 1, 0}}) {
        for (bool recal : {false, true}) {
            const auto model = calibrate(PartitionSpec::fit(request, data.calibration), data.calibration, recal);
            const auto text = io::model_to_json(model);
            const auto back = io::model_from_json(text);
            CHECK(back == model);
            CHECK(io::model_to_json(back) == text);
        }
    }
    CHECK_THROWS_AS(io::model_from_json("{}"), InvalidInput);
    CHECK_THROWS_AS(io::model_from_json(R"({"format":"hocroute-model","version":1})"), InvalidInput);
}

TEST_CASE("loss specs round-trip through JSON") {
    for (const auto& loss : all_default_losses()) CHECK(io::loss_from_json(io::loss_to_json(loss)) == loss);
    CHECK(io::loss_from_json(R"({"kind":"weighted_fpfn","params":{"c_fp":2,"c_fn":7}})") == LossSpec::weighted_fp_fn(2, 7));
    CHECK_THROWS_AS(io::loss_from_json(R"({"kind":"crossentropy","params":{"epsilon":0.9}})"), InvalidInput);
}

TEST_CASE("SHA-256 digests") {
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("external score files") {
    const auto path = scratch("scores.csv");
    io::write_file(path, "# comment\nid,score\na,0.5\nb,-1e-3\n");
    const auto s = io::read_scores_csv(path);
    CHECK(s.size() == 2);
    CHECK(s.at("b") == -1e-3);
    io::write_file(path, "a,0.5\nb,oops\n");
    CHECK_THROWS_AS(io::read_scores_csv(path), InvalidInput);
}
