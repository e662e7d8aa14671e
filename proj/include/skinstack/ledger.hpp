#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"

namespace skinstack {

/// Content fingerprint over a sequence of named parts.
class InputHash {
public:
    InputHash& add(std::string_view label, std::string_view bytes) {
        fnv_.update(label).update(std::string_view("\0", 1));
        fnv_.update(std::to_string(bytes.size())).update(std::string_view("\0", 1)).update(bytes);
        return *this;
    }

    InputHash& add_file(const std::filesystem::path& path) {
        return add(path.filename().string(), detail::read_file(path));
    }

    [[nodiscard]] std::string hex() const { return fnv_.hex(); }

private:
    detail::Fnv1a fnv_;
};

[[nodiscard]] inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Append-only JSON-lines record of completed stages:
///   {"stage":"train","key":"inceptionv3","input_hash":"...","outputs":[...],
///    "status":"completed","timestamp":"..."}
/// A stage whose latest completion has the same input hash and whose outputs
/// all still exist is skipped unless forced.
class RunLedger {
public:
    struct Entry {
        std::string stage;
        std::string key;
        std::string input_hash;
        std::vector<std::string> outputs;  // relative to the ledger's directory
        std::string status;
        std::string timestamp;
    };

    explicit RunLedger(std::filesystem::path path) : path_(std::move(path)) {
        if (!std::filesystem::exists(path_)) {
            return;
        }
        std::istringstream in(detail::read_file(path_));
        std::size_t lineno = 0;
        for (std::string line; std::getline(in, line);) {
            ++lineno;
            if (detail::trim(line).empty()) {
                continue;
            }
            try {
                const auto j = nlohmann::json::parse(line);
                Entry e;
                e.stage = j.at("stage").get<std::string>();
                e.key = j.at("key").get<std::string>();
                e.input_hash = j.at("input_hash").get<std::string>();
                e.outputs = j.at("outputs").get<std::vector<std::string>>();
                e.status = j.at("status").get<std::string>();
                e.timestamp = j.value("timestamp", "");
                entries_.push_back(std::move(e));
            } catch (const nlohmann::json::exception& e) {
                throw DataError(path_.string() + ":" + std::to_string(lineno) + ": corrupt ledger line: " + e.what());
            }
        }
    }

    [[nodiscard]] const std::vector<Entry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    [[nodiscard]] const Entry* last_completed(std::string_view stage, std::string_view key) const {
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
            if (it->stage == stage && it->key == key && it->status == "completed") {
                return &*it;
            }
        }
        return nullptr;
    }

    [[nodiscard]] bool is_current(std::string_view stage, std::string_view key, std::string_view input_hash) const {
        const auto* e = last_completed(stage, key);
        if (e == nullptr || e->input_hash != input_hash) {
            return false;
        }
        const auto root = path_.parent_path();
        for (const auto& out : e->outputs) {
            if (!std::filesystem::exists(root / out)) {
                return false;
            }
        }
        return true;
    }

    void record(std::string_view stage, std::string_view key, std::string_view input_hash,
                const std::vector<std::string>& outputs, std::string_view status) {
        Entry e{std::string(stage), std::string(key), std::string(input_hash), outputs, std::string(status),
                utc_timestamp()};
        nlohmann::ordered_json j{{"stage", e.stage},   {"key", e.key},       {"input_hash", e.input_hash},
                                 {"outputs", e.outputs}, {"status", e.status}, {"timestamp", e.timestamp}};
        if (path_.has_parent_path()) {
            std::filesystem::create_directories(path_.parent_path());
        }
        std::ofstream out(path_, std::ios::app);
        if (!out) {
            throw DataError("cannot append to ledger " + path_.string());
        }
        out << j.dump() << '\n';
        entries_.push_back(std::move(e));
    }

private:
    std::filesystem::path path_;
    std::vector<Entry> entries_;
};

}  // namespace skinstack
