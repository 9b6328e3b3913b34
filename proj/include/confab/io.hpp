#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "confab/errors.hpp"

namespace confab {

using json = nlohmann::json;

// Shortest round-trip decimal representation; stable across runs.
inline std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Write-temp-then-rename so readers never observe a partial file.
inline void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInputError("cannot open file for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw InvalidInputError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// Parses JSONL text into one json object per non-empty line. Lines whose only
// key is "meta" carry file provenance and are returned separately.
struct JsonlFile {
    json meta;  // null when absent
    std::vector<json> records;
};

inline JsonlFile parse_jsonl(std::string_view text) {
    JsonlFile out;
    out.meta = json();
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded()) {
            throw InvalidInputError("invalid JSON on line " + std::to_string(line_no));
        }
        if (obj.is_object() && obj.size() == 1 && obj.contains("meta")) {
            out.meta = obj["meta"];
        } else {
            out.records.push_back(std::move(obj));
        }
    }
    return out;
}

inline JsonlFile read_jsonl(const std::filesystem::path& path) {
    return parse_jsonl(read_text_file(path));
}

inline std::string dump_jsonl(const std::vector<json>& records, const json& meta = json()) {
    std::string out;
    if (!meta.is_null()) {
        json head;
        head["meta"] = meta;
        out += head.dump();
        out += '\n';
    }
    for (const json& rec : records) {
        out += rec.dump();
        out += '\n';
    }
    return out;
}

// FNV-1a over a string, rendered as fixed-width hex; used for config hashes.
inline std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// Minimal CSV writer: caller supplies the header once, then rows of cells.
class CsvWriter {
public:
    void comment(std::string_view line) {
        body_ += "# ";
        body_ += line;
        body_ += '\n';
    }

    void header(const std::vector<std::string>& names) { row(names); }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i > 0) body_ += ',';
            body_ += cells[i];
        }
        body_ += '\n';
    }

    const std::string& str() const { return body_; }

private:
    std::string body_;
};

} // namespace confab
