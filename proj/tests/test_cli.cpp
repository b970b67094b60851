#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "perturba/io.hpp"
#include "perturba/random.hpp"
#include "support.hpp"

using namespace perturba;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string err;
};

class Workdir {
public:
    Workdir() : dir_(fs::temp_directory_path() / ("perturba_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(dir_);
    }
    ~Workdir() { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    void write(const std::string& name, const std::string& text) const { io::write_text_file(path(name), text); }

    std::string read(const std::string& name) const {
        std::ifstream in(path(name), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    Run run(const std::string& args, const std::string& env = "") const {
        const std::string err = path("stderr.txt");
        const std::string cmd =
            "cd '" + dir_.string() + "' && " + env + " '" + PERTURBA_CLI + "' " + args + " >/dev/null 2>'" + err + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read("stderr.txt")};
    }

private:
    fs::path dir_;
};

CMatrix load(const Workdir& w, const std::string& name) {
    return io::matrix_from_json(io::read_json_file(w.path(name)));
}

} // namespace

TEST_CASE("correction subcommands") {
    const Workdir w;
    SUBCASE("project") {
        w.write("b.json", io::matrix_to_json(testing::diag({0.1, 0.9})));
        CHECK(w.run("project b.json").code == 0);
        CHECK(testing::dist(load(w, "b.out.json"), testing::diag({0, 1})) < 1e-15);
        const io::Json cert = io::read_json_file(w.path("b.cert.json"));
        CHECK(cert.at("correction_distance").get<double>() == doctest::Approx(0.1));
        CHECK(cert.at("bound_claimed").get<double>() == doctest::Approx(0.18));
    }
    SUBCASE("project outside the hypothesis") {
        w.write("half.json", io::matrix_to_json(testing::diag({0.5})));
        const Run r = w.run("project half.json");
        CHECK(r.code == 2);
        CHECK(r.err.find("hypothesis failed") != std::string::npos);
        CHECK(r.err.find("< 1/4") != std::string::npos);
    }
    SUBCASE("triangularize") {
        w.write("v.json", io::matrix_to_json(testing::rotation(0.1)));
        CHECK(w.run("triangularize v.json --composition 1,1 --out tri.json --cert tri.cert.json").code == 0);
        CHECK(testing::dist(load(w, "tri.json"), CMatrix::Identity(2, 2)) < 1e-15);
    }
    SUBCASE("pisofix and conjugate") {
        w.write("v.json", io::matrix_to_json(testing::diag({1, 0.9, 0})));
        CHECK(w.run("pisofix v.json").code == 0);
        CHECK(testing::dist(load(w, "v.out.json"), testing::diag({1, 1, 0})) < 1e-15);

        const CMatrix p = testing::diag({1, 0});
        const CMatrix q = testing::rotation(0.1) * p * testing::rotation(0.1).adjoint();
        w.write("p.json", io::matrix_to_json(p));
        w.write("q.json", io::matrix_to_json(q));
        CHECK(w.run("conjugate p.json q.json").code == 0);
        const CMatrix u = load(w, "p.out.json");
        CHECK(testing::dist(u * p * u.adjoint(), q) < 1e-14);

        w.write("q2.json", io::matrix_to_json(testing::diag({0, 1})));
        CHECK(w.run("conjugate p.json q2.json").code == 2);
    }
    SUBCASE("normfix with default pattern and masa") {
        const Complex phase = std::polar(1.0, 0.7);
        w.write("n.json", io::matrix_to_json(testing::mat({{0, 0.98 * phase}, {0.99, 0}})));
        CHECK(w.run("normfix n.json").code == 0);
        CHECK(testing::dist(load(w, "n.out.json"), testing::mat({{0, phase}, {1, 0}})) < 1e-15);
    }
    SUBCASE("distance") {
        w.write("x.json", io::matrix_to_json(testing::mat({{0, 0}, {Complex(0.3, 0.4), 0}})));
        CHECK(w.run("distance x.json --composition 1,1").code == 0);
        CHECK(io::read_json_file(w.path("x.out.json")).at("arveson_distance").get<double>() == doctest::Approx(0.5));
        CHECK(w.run("distance x.json").code == 0);
        const io::Json d = io::read_json_file(w.path("x.out.json"));
        CHECK(d.at("estimate").get<double>() == doctest::Approx(0.5));
        CHECK(d.at("exhaustive").get<bool>());
    }
    SUBCASE("stabilize a bundle") {
        const IncidencePattern t2 = IncidencePattern::closure_of(2, {{0, 1}});
        w.write("phi.json", io::embedding_to_json(random_near_identity_embedding(t2, 2, 1e-3, 1)));
        CHECK(w.run("stabilize phi.json --composition 2,2").code == 0);
        const StarEmbedding psi = io::embedding_from_json(io::read_json_file(w.path("phi.out.json")));
        CHECK(matrix_unit_residual(psi.images) <= 4e-9);
        const IncidencePattern m2 = IncidencePattern::full(2);
        w.write("m2.json", io::embedding_to_json(random_near_identity_embedding(m2, 2, 1e-3, 1)));
        CHECK(w.run("stabilize m2.json --composition 2,2").code == 2);
    }
    SUBCASE("validation and io errors") {
        CHECK(w.run("project missing.json").code == 1);
        w.write("bad.json", "{\"rows\": 2}");
        CHECK(w.run("project bad.json").code == 1);
        w.write("nh.json", io::matrix_to_json(testing::mat({{0, 1}, {0, 0}})));
        CHECK(w.run("project nh.json").code == 1);
        CHECK(w.run("frobnicate").code == 1);
        CHECK(w.run("").code == 1);
    }
}

TEST_CASE("experiment subcommand") {
    const Workdir w;
    SUBCASE("manifest reruns are byte-identical") {
        CHECK(w.run("experiment --experiment regular-stability --vertices 3 --pairs 1:2,2:3 --trials 4 --out a.csv")
                  .code == 0);
        CHECK(w.run("experiment --config a.manifest.json --out b.csv").code == 0);
        CHECK(w.read("a.csv") == w.read("b.csv"));
        CHECK(io::read_json_file(w.path("a.manifest.json")).at("results").get<std::string>() == "a.csv");
    }
    SUBCASE("precedence: config, then environment, then flags") {
        w.write("c.txt", "experiment = normfix-sweep\ntrials = 2\nseed = 1\n");
        CHECK(w.run("experiment --config c.txt --out c1.csv").code == 0);
        CHECK(w.run("experiment --config c.txt --out c2.csv", "PERTURBA_SEED=2").code == 0);
        CHECK(w.run("experiment --config c.txt --out c3.csv --seed 1", "PERTURBA_SEED=2").code == 0);
        CHECK(w.read("c1.csv") != w.read("c2.csv"));
        CHECK(w.read("c1.csv") == w.read("c3.csv"));
        CHECK(io::read_json_file(w.path("c2.manifest.json")).at("config").at("seed").get<std::string>() == "2");
    }
    SUBCASE("zero trials") {
        CHECK(w.run("experiment --experiment stability --trials 0 --out z.csv").code == 0);
        CHECK(w.read("z.csv") ==
              "experiment,trial,epsilon,defect_in,recovery_distance,structural_residual,runtime_ms,status\n");
    }
    SUBCASE("invalid experiment") {
        const Run r = w.run("experiment --experiment bogus");
        CHECK(r.code == 1);
        CHECK(r.err.find("unknown experiment") != std::string::npos);
        CHECK(w.run("experiment --experiment stability --trials -3").code == 1);
    }
}
