#include "taurus/simnet/scenario.hpp"

#include <charconv>
#include <sstream>

namespace taurus::sim {

namespace {

bool parse_kv_u64(const std::string& tok, const char* key, uint64_t& out) {
    std::string prefix = std::string(key) + "=";
    if (tok.rfind(prefix, 0) != 0) return false;
    const char* begin = tok.c_str() + prefix.size();
    const char* end = tok.c_str() + tok.size();
    auto [p, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && p == end;
}

bool parse_kv_str(const std::string& tok, const char* key, std::string& out) {
    std::string prefix = std::string(key) + "=";
    if (tok.rfind(prefix, 0) != 0) return false;
    out = tok.substr(prefix.size());
    return !out.empty();
}

}  // namespace

Time ScenarioScript::end_time() const {
    Time t = 0;
    for (const auto& e : events) t = std::max(t, e.at + e.duration);
    return t;
}

std::optional<ScenarioScript> parse_scenario(const std::string& text, ScenarioParseError* err) {
    ScenarioScript script;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& m) {
        if (err) *err = {lineno, m};
        return std::nullopt;
    };

    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        std::string t;
        while (ls >> t) tok.push_back(t);
        if (tok.empty() || tok[0][0] == '#') continue;

        if (tok.size() < 3 || tok[0] != "AT") return fail("expected 'AT <ms> <EVENT>'");
        ScenarioEvent ev;
        {
            const std::string& ts = tok[1];
            auto [p, ec] = std::from_chars(ts.c_str(), ts.c_str() + ts.size(), ev.at);
            if (ec != std::errc() || p != ts.c_str() + ts.size()) return fail("bad time: " + ts);
        }
        const std::string& verb = tok[2];

        if (verb == "WRITE") {
            ev.kind = ScenarioEvent::Kind::kWrite;
            bool have_page = false, have_len = false;
            for (size_t i = 3; i < tok.size(); ++i) {
                uint64_t v;
                if (parse_kv_u64(tok[i], "page", v)) {
                    ev.page = v;
                    have_page = true;
                } else if (parse_kv_u64(tok[i], "len", v)) {
                    ev.len = v;
                    have_len = true;
                } else {
                    return fail("bad WRITE arg: " + tok[i]);
                }
            }
            if (!have_page || !have_len) return fail("WRITE needs page= and len=");
        } else if (verb == "BEGIN_GROUP") {
            ev.kind = ScenarioEvent::Kind::kBeginGroup;
        } else if (verb == "END_GROUP") {
            ev.kind = ScenarioEvent::Kind::kEndGroup;
        } else if (verb == "CRASH") {
            ev.kind = ScenarioEvent::Kind::kCrash;
            if (tok.size() != 6 || tok[4] != "FOR") return fail("CRASH node=<id> FOR <ms>");
            if (!parse_kv_str(tok[3], "node", ev.node_a)) return fail("bad CRASH node arg");
            const std::string& ds = tok[5];
            auto [p, ec] = std::from_chars(ds.c_str(), ds.c_str() + ds.size(), ev.duration);
            if (ec != std::errc() || p != ds.c_str() + ds.size()) return fail("bad duration");
        } else if (verb == "PARTITION") {
            ev.kind = ScenarioEvent::Kind::kPartition;
            if (tok.size() != 7 || tok[5] != "FOR") return fail("PARTITION <id> <id> FOR <ms>");
            ev.node_a = tok[3];
            ev.node_b = tok[4];
            const std::string& ds = tok[6];
            auto [p, ec] = std::from_chars(ds.c_str(), ds.c_str() + ds.size(), ev.duration);
            if (ec != std::errc() || p != ds.c_str() + ds.size()) return fail("bad duration");
        } else if (verb == "READ") {
            ev.kind = ScenarioEvent::Kind::kRead;
            bool have_page = false;
            for (size_t i = 3; i < tok.size(); ++i) {
                uint64_t v;
                if (parse_kv_u64(tok[i], "page", v)) {
                    ev.page = v;
                    have_page = true;
                } else if (parse_kv_u64(tok[i], "lsn", v)) {
                    ev.lsn = v;
                } else if (parse_kv_str(tok[i], "replica", ev.node_a)) {
                } else {
                    return fail("bad READ arg: " + tok[i]);
                }
            }
            if (!have_page) return fail("READ needs page=");
        } else if (verb == "CHECK") {
            ev.kind = ScenarioEvent::Kind::kCheck;
            if (tok.size() != 4) return fail("CHECK <invariant-name>");
            ev.check_name = tok[3];
        } else {
            return fail("unknown event: " + verb);
        }
        script.events.push_back(std::move(ev));
    }
    return script;
}

}  // namespace taurus::sim
