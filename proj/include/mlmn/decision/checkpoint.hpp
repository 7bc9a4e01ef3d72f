#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "mlmn/decision/classifier.hpp"
#include "mlmn/numerics/binary_io.hpp"

namespace mlmn::decision {

    // "MLMNDECI" | u32 version | str path | str config-json | tensors
    inline constexpr char checkpoint_magic[8] = {'M', 'L', 'M', 'N', 'D', 'E', 'C', 'I'};
    inline constexpr std::uint32_t checkpoint_version = 1;

    inline void save_decision_model(std::ostream& os, const DecisionModel& model) {
        binary::write_header(os, checkpoint_magic, checkpoint_version);
        binary::put_string(os, to_string(model.path()));
        binary::put_string(os, nlohmann::json(model.config()).dump());
        binary::write_tensors(os, model.params());
    }

    inline void save_decision_model(const std::string& path, const DecisionModel& model) {
        binary::write_file_atomic(path, [&](std::ostream& os) { save_decision_model(os, model); });
    }

    inline DecisionModel load_decision_model(std::istream& is) {
        binary::read_header(is, checkpoint_magic, checkpoint_version, "a decision checkpoint");
        Path path;
        DecisionConfig config;
        try {
            path = parse_path(binary::get_string(is));
            config = nlohmann::json::parse(binary::get_string(is)).get<DecisionConfig>();
        } catch (const Error& e) {
            throw CompatibilityError(std::string("decision checkpoint header: ") + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw CompatibilityError(std::string("decision checkpoint config: ") + e.what());
        }
        auto tensors = binary::read_tensors(is);
        DecisionModel model(config, path, binary::find_tensor(tensors, "embedding"), 0);
        binary::assign_tensors(model.params(), std::move(tensors));
        return model;
    }

    inline DecisionModel load_decision_model(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw InputError("cannot read decision checkpoint: " + path);
        return load_decision_model(is);
    }

}  // namespace mlmn::decision
