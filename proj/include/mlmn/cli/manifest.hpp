#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlmn/errors.hpp"
#include "mlmn/numerics/binary_io.hpp"

namespace mlmn::cli {

    using nlohmann::json;

    inline std::string read_file(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw InputError("cannot read " + path);
        std::ostringstream ss;
        ss << is.rdbuf();
        return ss.str();
    }

    inline std::string sha1_hex(const std::string& bytes) {
        std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
            EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
            EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
            throw Error("sha1 digest failed");
        }
        std::string hex;
        char buf[3];
        for (unsigned int i = 0; i < len; ++i) {
            std::snprintf(buf, sizeof buf, "%02x", md[i]);
            hex += buf;
        }
        return hex;
    }

    // Same digest git assigns to a blob with these contents.
    inline std::string git_blob_hash(const std::string& bytes) {
        std::string blob = "blob " + std::to_string(bytes.size());
        blob.push_back('\0');
        return sha1_hex(blob + bytes);
    }

    inline std::string utc_timestamp() {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    struct InputFile {
        std::string path;
        std::string hash;
    };

    struct RunManifest {
        std::string command;
        std::vector<std::string> args;  // as given, so the run can be replayed
        json config;
        std::uint64_t seed = 0;
        std::vector<InputFile> inputs;
        std::vector<std::string> outputs;
        std::string started;
        std::string finished;

        void add_input(const std::string& path) { inputs.push_back({path, git_blob_hash(read_file(path))}); }
    };

    inline json to_json(const RunManifest& m) {
        json inputs = json::array();
        for (const auto& f : m.inputs) inputs.push_back({{"path", f.path}, {"hash", f.hash}});
        return json{{"command", m.command}, {"args", m.args},     {"config", m.config},
                    {"seed", m.seed},       {"inputs", inputs},   {"outputs", m.outputs},
                    {"started", m.started}, {"finished", m.finished}};
    }

    inline RunManifest manifest_from_json(const json& j) {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.config = j.value("config", json::object());
        m.seed = j.value("seed", std::uint64_t{0});
        for (const auto& f : j.value("inputs", json::array())) {
            m.inputs.push_back({f.at("path").get<std::string>(), f.at("hash").get<std::string>()});
        }
        m.outputs = j.value("outputs", std::vector<std::string>{});
        m.started = j.value("started", std::string{});
        m.finished = j.value("finished", std::string{});
        return m;
    }

    inline void write_manifest(const std::string& path, const RunManifest& m) {
        binary::write_file_atomic(path, [&](std::ostream& os) { os << to_json(m).dump(2) << '\n'; });
    }

    inline RunManifest read_manifest(const std::string& path) {
        try {
            return manifest_from_json(json::parse(read_file(path)));
        } catch (const json::exception& e) {
            throw InputError(path + ": " + e.what());
        }
    }

    // Inputs must still hash to the recorded values before a replay.
    inline void check_inputs_unchanged(const RunManifest& m) {
        for (const auto& f : m.inputs) {
            if (!std::filesystem::exists(f.path)) throw InputError("replay input is missing: " + f.path);
            if (git_blob_hash(read_file(f.path)) != f.hash) {
                throw CompatibilityError("replay input changed since the recorded run: " + f.path);
            }
        }
    }

}  // namespace mlmn::cli
