#include "cak/dsl.hpp"

#include "cak/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace cak {
namespace dsl {

using json = nlohmann::json;

namespace {

ParseError parse_error_at(const std::string& text, size_t byte, const std::string& what) {
    int line = 1, col = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return ParseError(what + " (line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ")",
                      line, col);
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error_at(text, e.byte, "malformed JSON: " + std::string(e.what()));
    }
}

// ─── Value <-> JSON ──────────────────────────────────────────────────────

json value_to_json(const Value& v) {
    if (v.is_num()) return v.num();
    if (v.is_sym()) return v.sym();
    if (v.is_vec()) return json(v.vec());
    json arr = json::array();
    for (const auto& c : v.tup()) arr.push_back(value_to_json(c));
    return json{{"tuple", arr}};
}

Value value_from_json(const json& j, const std::string& path) {
    if (j.is_number()) return Value(j.get<double>());
    if (j.is_string()) return Value(j.get<std::string>());
    if (j.is_array()) {
        Value::Vec x;
        for (const auto& e : j) {
            if (!e.is_number()) throw TypeError("vector entries must be numbers", path);
            x.push_back(e.get<double>());
        }
        return Value(std::move(x));
    }
    if (j.is_object() && j.contains("tuple")) {
        Value::Tuple t;
        int k = 0;
        for (const auto& e : j.at("tuple"))
            t.push_back(value_from_json(e, path + ".tuple[" + std::to_string(k++) + "]"));
        return Value::tuple(std::move(t));
    }
    throw TypeError("expected a value literal", path);
}

// ─── Expr <-> JSON ───────────────────────────────────────────────────────

const char* op_name(ExprOp op) {
    switch (op) {
        case ExprOp::Add: return "add";
        case ExprOp::Sub: return "sub";
        case ExprOp::Mul: return "mul";
        case ExprOp::Div: return "div";
        case ExprOp::Neg: return "neg";
        case ExprOp::Min: return "min";
        case ExprOp::Max: return "max";
        case ExprOp::Abs: return "abs";
        case ExprOp::Relu: return "relu";
        case ExprOp::Indicator: return "indicator";
        case ExprOp::Eq: return "eq";
        case ExprOp::Lt: return "lt";
        case ExprOp::Le: return "le";
        case ExprOp::Gt: return "gt";
        case ExprOp::Ge: return "ge";
        case ExprOp::Vec: return "vec";
        case ExprOp::Tuple: return "tuple-of";
        default: return "";
    }
}

std::optional<ExprOp> op_from_name(const std::string& name) {
    static const std::vector<std::pair<std::string, ExprOp>> table = {
        {"add", ExprOp::Add}, {"sub", ExprOp::Sub}, {"mul", ExprOp::Mul},
        {"div", ExprOp::Div}, {"neg", ExprOp::Neg}, {"min", ExprOp::Min},
        {"max", ExprOp::Max}, {"abs", ExprOp::Abs}, {"relu", ExprOp::Relu},
        {"indicator", ExprOp::Indicator}, {"eq", ExprOp::Eq}, {"lt", ExprOp::Lt},
        {"le", ExprOp::Le}, {"gt", ExprOp::Gt}, {"ge", ExprOp::Ge},
        {"vec", ExprOp::Vec}, {"tuple-of", ExprOp::Tuple},
    };
    for (const auto& [n, op] : table)
        if (n == name) return op;
    return std::nullopt;
}

json setting_to_json(const Setting& s) {
    json obj = json::object();
    for (VarId v : s.domain()) obj[s.sig()->name(v)] = value_to_json(s.at(v));
    return obj;
}

Setting setting_from_json(const json& j, const SignaturePtr& sig, const std::string& path) {
    if (!j.is_object()) throw TypeError("setting must be an object", path);
    Setting s(sig);
    for (const auto& [key, val] : j.items()) {
        auto id = sig->find(key);
        if (!id) throw UndeclaredVariable("setting references undeclared variable " + key);
        s.set(*id, value_from_json(val, path + "." + key));
    }
    return s;
}

json expr_to_json(const ExprPtr& e, const SignaturePtr& sig);

json expr_args_to_json(const Expr& e, const SignaturePtr& sig) {
    json arr = json::array();
    for (const auto& a : e.args) arr.push_back(expr_to_json(a, sig));
    return arr;
}

json expr_to_json(const ExprPtr& e, const SignaturePtr& sig) {
    switch (e->op) {
        case ExprOp::Lit: {
            const Value& v = e->literal;
            if (v.is_num()) return v.num();
            if (v.is_sym()) return json{{"lit", v.sym()}};
            return json{{"lit", value_to_json(v)}};
        }
        case ExprOp::Var:
            return json{{"var", e->var_name}};
        case ExprOp::Neg:
        case ExprOp::Abs:
        case ExprOp::Relu:
        case ExprOp::Indicator:
            return json{{op_name(e->op), expr_to_json(e->args[0], sig)}};
        case ExprOp::If:
            return json{{"if", expr_to_json(e->args[0], sig)},
                        {"then", expr_to_json(e->args[1], sig)},
                        {"else", expr_to_json(e->args[2], sig)}};
        case ExprOp::Proj:
            return json{{"proj", e->proj_index}, {"of", expr_to_json(e->args[0], sig)}};
        case ExprOp::Matmul:
            return json{{"matmul", e->matrix}, {"of", expr_to_json(e->args[0], sig)}};
        case ExprOp::Table: {
            json rows = json::array();
            for (const auto& row : e->rows)
                rows.push_back(json::array({setting_to_json(row.key), value_to_json(row.value)}));
            json t{{"rows", rows}};
            if (e->has_default) t["default"] = value_to_json(e->default_value);
            return json{{"table", t}};
        }
        default:
            return json{{op_name(e->op), expr_args_to_json(*e, sig)}};
    }
}

ExprPtr expr_from_json(const json& j, const SignaturePtr& sig, const std::string& path) {
    if (j.is_number()) return Expr::lit(Value(j.get<double>()));
    if (j.is_string()) return Expr::lit(Value(j.get<std::string>()));
    if (j.is_array()) return Expr::lit(value_from_json(j, path));
    if (!j.is_object()) throw TypeError("expected an expression", path);

    if (j.contains("lit")) return Expr::lit(value_from_json(j.at("lit"), path + ".lit"));
    if (j.contains("var")) {
        std::string name = j.at("var").get<std::string>();
        if (sig && !sig->find(name))
            throw UndeclaredVariable("expression references undeclared variable " + name);
        return Expr::var(name);
    }
    if (j.contains("if")) {
        return Expr::if_(expr_from_json(j.at("if"), sig, path + ".if"),
                         expr_from_json(j.at("then"), sig, path + ".then"),
                         expr_from_json(j.at("else"), sig, path + ".else"));
    }
    if (j.contains("proj"))
        return Expr::proj(j.at("proj").get<int>(),
                          expr_from_json(j.at("of"), sig, path + ".of"));
    if (j.contains("matmul"))
        return Expr::matmul(j.at("matmul").get<std::vector<std::vector<double>>>(),
                            expr_from_json(j.at("of"), sig, path + ".of"));
    if (j.contains("table")) {
        const json& t = j.at("table");
        std::vector<TableRow> rows;
        int k = 0;
        for (const auto& row : t.at("rows")) {
            if (!row.is_array() || row.size() != 2)
                throw TypeError("table rows are [key-setting, value] pairs",
                                path + ".table.rows[" + std::to_string(k) + "]");
            rows.push_back(TableRow{
                setting_from_json(row[0], sig, path + ".table.rows"),
                value_from_json(row[1], path + ".table.rows")});
            ++k;
        }
        bool has_default = t.contains("default");
        Value def = has_default ? value_from_json(t.at("default"), path + ".table.default")
                                : Value(0.0);
        return Expr::table(std::move(rows), has_default, std::move(def));
    }
    if (j.size() == 1) {
        const auto& [key, val] = *j.items().begin();
        auto op = op_from_name(key);
        if (!op) throw ParseError("unknown expression op: " + key);
        if (*op == ExprOp::Neg || *op == ExprOp::Abs || *op == ExprOp::Relu ||
            *op == ExprOp::Indicator)
            return Expr::make(*op, {expr_from_json(val, sig, path + "." + key)});
        if (!val.is_array())
            throw TypeError("op " + key + " expects an argument array", path);
        std::vector<ExprPtr> args;
        int k = 0;
        for (const auto& a : val)
            args.push_back(expr_from_json(a, sig, path + "." + key + "[" +
                                                      std::to_string(k++) + "]"));
        return Expr::make(*op, std::move(args));
    }
    throw ParseError("unrecognized expression object at " + path);
}

// ─── Signature <-> JSON ──────────────────────────────────────────────────

json signature_to_json(const Signature& sig) {
    json arr = json::array();
    for (VarId v = 0; v < sig.size(); ++v) {
        json entry{{"name", sig.name(v)}};
        const auto& r = sig.range(v);
        if (r.is_enum()) {
            json vals = json::array();
            for (const auto& val : r.values()) vals.push_back(value_to_json(val));
            entry["values"] = vals;
        } else {
            entry["real"] = r.real_dim();
        }
        arr.push_back(entry);
    }
    return arr;
}

SignaturePtr signature_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw TypeError("signature must be an array", path);
    std::vector<std::string> names;
    std::vector<ValueRange> ranges;
    int k = 0;
    for (const auto& entry : j) {
        std::string p = path + "[" + std::to_string(k++) + "]";
        if (!entry.contains("name")) throw TypeError("signature entry needs a name", p);
        names.push_back(entry.at("name").get<std::string>());
        if (entry.contains("values")) {
            std::vector<Value> vals;
            for (const auto& v : entry.at("values"))
                vals.push_back(value_from_json(v, p + ".values"));
            ranges.push_back(ValueRange::enumerated(std::move(vals)));
        } else if (entry.contains("real")) {
            ranges.push_back(ValueRange::real(entry.at("real").get<int>()));
        } else {
            throw TypeError("signature entry needs values or real", p);
        }
    }
    return std::make_shared<Signature>(std::move(names), std::move(ranges));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

} // namespace

// ─── Models ──────────────────────────────────────────────────────────────

namespace {
DenseNet dense_from_json(const json& d) {
    DenseNet net;
    for (const auto& [sym, vec] : d.at("embeddings").items())
        net.embeddings[sym] = vec.get<std::vector<double>>();
    net.symbol_slots = d.at("slots").get<int>();
    for (const auto& layer : d.at("layers")) {
        DenseLayer l;
        l.weights = layer.at("w").get<std::vector<std::vector<double>>>();
        l.relu = layer.value("act", std::string("relu")) == "relu";
        net.layers.push_back(std::move(l));
    }
    if (d.contains("readout")) {
        const auto& r = d.at("readout");
        net.readout.enabled = true;
        for (const auto& l : r.at("labels"))
            net.readout.labels.push_back(value_from_json(l, "dense.readout.labels"));
        net.readout.tie_index = r.value("tie", 0);
        net.readout.variable = r.value("variable", std::string("label"));
    }
    net.var_prefix = d.value("prefix", std::string("n"));
    return net;
}

json dense_to_json(const DenseNet& net) {
    json d;
    json emb = json::object();
    for (const auto& [sym, vec] : net.embeddings) emb[sym] = vec;
    d["embeddings"] = emb;
    d["slots"] = net.symbol_slots;
    json layers = json::array();
    for (const auto& l : net.layers)
        layers.push_back(json{{"w", l.weights}, {"act", l.relu ? "relu" : "linear"}});
    d["layers"] = layers;
    if (net.readout.enabled) {
        json labels = json::array();
        for (const auto& l : net.readout.labels) labels.push_back(value_to_json(l));
        d["readout"] =
            json{{"labels", labels}, {"tie", net.readout.tie_index},
                 {"variable", net.readout.variable}};
    }
    d["prefix"] = net.var_prefix;
    return d;
}
} // namespace

namespace {
[[noreturn]] void rethrow_as_parse_error(const std::exception& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
}
} // namespace

ParsedModel parse_model(const std::string& text) {
    json j = parse_json(text);
    try {
    if (j.value("format", std::string()) != "cam/1")
        throw ParseError("expected a cam/1 document");
    double tol = j.value("tolerance", 0.0);
    std::string name = j.value("name", std::string());

    if (j.contains("dense")) {
        DenseNet net = dense_from_json(j.at("dense"));
        ParsedModel out{net_to_model(net, tol == 0.0 ? 1e-9 : tol), net, name};
        return out;
    }

    if (!j.contains("signature") || !j.contains("mechanisms"))
        throw ParseError("model document needs signature and mechanisms");
    SignaturePtr sig = signature_from_json(j.at("signature"), "signature");
    std::vector<Mechanism> mechs(sig->size(), Mechanism::constant(Value(0.0)));
    std::vector<char> seen(sig->size(), 0);
    for (const auto& [var, body] : j.at("mechanisms").items()) {
        auto id = sig->find(var);
        if (!id) throw UndeclaredVariable("mechanism for undeclared variable " + var);
        mechs[*id] = Mechanism::expression(
            expr_from_json(body, sig, "mechanisms." + var));
        seen[*id] = 1;
    }
    for (VarId v = 0; v < sig->size(); ++v)
        if (!seen[v]) throw ParseError("missing mechanism for variable " + sig->name(v));
    return ParsedModel{CausalModel(sig, std::move(mechs), tol, name), std::nullopt, name};
    } catch (const json::exception& e) {
        rethrow_as_parse_error(e);
    }
}

std::string serialize_model(const CausalModel& m, const std::string& name) {
    json j;
    j["format"] = "cam/1";
    j["kind"] = "model";
    if (!name.empty())
        j["name"] = name;
    else if (!m.name().empty())
        j["name"] = m.name();
    if (m.tolerance() != 0.0) j["tolerance"] = m.tolerance();
    j["signature"] = signature_to_json(*m.sig());
    json mechs = json::object();
    for (VarId v = 0; v < m.sig()->size(); ++v) {
        const auto& mech = m.mechanism(v);
        if (!mech.expr())
            throw TypeMismatch("mechanism of " + m.sig()->name(v) +
                               " is host-backed; materialize tables first");
        mechs[m.sig()->name(v)] = expr_to_json(mech.expr(), m.sig());
    }
    j["mechanisms"] = mechs;
    return dump(j);
}

std::string serialize_dense(const DenseNet& net, double tolerance, const std::string& name) {
    json j;
    j["format"] = "cam/1";
    j["kind"] = "model";
    if (!name.empty()) j["name"] = name;
    if (tolerance != 0.0) j["tolerance"] = tolerance;
    j["dense"] = dense_to_json(net);
    return dump(j);
}

// ─── Alignments ──────────────────────────────────────────────────────────

ParsedAlignment parse_alignment(const std::string& text, const SignaturePtr& low,
                                const SignaturePtr& high) {
    json j = parse_json(text);
    if (j.value("format", std::string()) != "cam/1")
        throw ParseError("expected a cam/1 document");

    if (j.value("identity", false)) {
        if (!(*low == *high))
            throw PartitionError("identity alignment needs matching signatures");
        return ParsedAlignment{Alignment::identity(low), {}};
    }

    std::vector<std::vector<VarId>> cells(high->size());
    std::vector<VarId> bot;
    std::vector<CellMap> maps(high->size(), CellMap::identity());
    std::vector<std::string> induced;

    if (!j.contains("cells")) throw ParseError("alignment document needs cells");
    for (const auto& [hname, members] : j.at("cells").items()) {
        auto hid = high->find(hname);
        if (!hid) throw UndeclaredVariable("cell for undeclared high variable " + hname);
        for (const auto& mem : members) {
            auto lid = low->find(mem.get<std::string>());
            if (!lid)
                throw UndeclaredVariable("cell member is not a low variable: " +
                                         mem.get<std::string>());
            cells[*hid].push_back(*lid);
        }
        std::sort(cells[*hid].begin(), cells[*hid].end());
    }
    if (j.contains("bot")) {
        for (const auto& mem : j.at("bot")) {
            auto lid = low->find(mem.get<std::string>());
            if (!lid)
                throw UndeclaredVariable("bot member is not a low variable: " +
                                         mem.get<std::string>());
            bot.push_back(*lid);
        }
    }
    if (j.contains("maps")) {
        for (const auto& [hname, body] : j.at("maps").items()) {
            auto hid = high->find(hname);
            if (!hid) throw UndeclaredVariable("map for undeclared high variable " + hname);
            if (body.contains("identity")) {
                maps[*hid] = CellMap::identity();
            } else if (body.contains("table")) {
                std::vector<std::pair<Value, Value>> entries;
                for (const auto& row : body.at("table"))
                    entries.emplace_back(value_from_json(row[0], "maps." + hname),
                                         value_from_json(row[1], "maps." + hname));
                maps[*hid] = CellMap::table(std::move(entries));
            } else if (body.contains("expr")) {
                maps[*hid] = CellMap::expr(
                    expr_from_json(body.at("expr"), low, "maps." + hname + ".expr"));
            } else if (body.contains("argmax")) {
                std::vector<Value> labels;
                for (const auto& l : body.at("argmax").at("labels"))
                    labels.push_back(value_from_json(l, "maps." + hname + ".argmax"));
                maps[*hid] = CellMap::argmax(std::move(labels),
                                             body.at("argmax").value("tie", 0));
            } else if (body.value("interchange-induced", false)) {
                induced.push_back(hname);
            } else {
                throw ParseError("unknown map kind for " + hname);
            }
        }
    }
    return ParsedAlignment{Alignment(low, high, std::move(cells), std::move(bot),
                                     std::move(maps)),
                           std::move(induced)};
}

std::string serialize_alignment(const Alignment& a, const std::vector<std::string>& induced) {
    json j;
    j["format"] = "cam/1";
    j["kind"] = "alignment";
    json cells = json::object();
    for (VarId h = 0; h < a.high()->size(); ++h) {
        json members = json::array();
        for (VarId v : a.cell(h)) members.push_back(a.low()->name(v));
        cells[a.high()->name(h)] = members;
    }
    j["cells"] = cells;
    json bot = json::array();
    for (VarId v : a.bot_cell()) bot.push_back(a.low()->name(v));
    j["bot"] = bot;
    json maps = json::object();
    for (VarId h = 0; h < a.high()->size(); ++h) {
        const std::string& hname = a.high()->name(h);
        if (std::find(induced.begin(), induced.end(), hname) != induced.end()) {
            maps[hname] = json{{"interchange-induced", true}};
            continue;
        }
        const CellMap& m = a.map(h);
        switch (m.kind()) {
            case CellMap::Kind::Identity:
                maps[hname] = json{{"identity", true}};
                break;
            case CellMap::Kind::Table: {
                json rows = json::array();
                for (const auto& [k, v] : m.table_entries())
                    rows.push_back(json::array({value_to_json(k), value_to_json(v)}));
                maps[hname] = json{{"table", rows}};
                break;
            }
            case CellMap::Kind::Expr:
                maps[hname] = json{{"expr", expr_to_json(m.expr_ptr(), a.low())}};
                break;
            case CellMap::Kind::Argmax: {
                json labels = json::array();
                for (const auto& l : m.argmax_labels()) labels.push_back(value_to_json(l));
                maps[hname] =
                    json{{"argmax", json{{"labels", labels}, {"tie", m.argmax_tie()}}}};
                break;
            }
        }
    }
    j["maps"] = maps;
    return dump(j);
}

// ─── Suites and settings ─────────────────────────────────────────────────

std::vector<InterventionPtr> parse_suite(const std::string& text, const SignaturePtr& sig) {
    json j = parse_json(text);
    if (j.value("format", std::string()) != "cam/1")
        throw ParseError("expected a cam/1 document");
    std::vector<InterventionPtr> out;
    for (const auto& item : j.at("interventions")) {
        if (!item.contains("set"))
            throw ParseError("suite items are {\"set\": {...}} hard interventions");
        out.push_back(
            Intervention::hard(setting_from_json(item.at("set"), sig, "interventions")));
    }
    return out;
}

Setting parse_setting(const std::string& text, const SignaturePtr& sig) {
    json j = parse_json(text);
    if (j.value("format", std::string()) != "cam/1")
        throw ParseError("expected a cam/1 document");
    return setting_from_json(j.at("set"), sig, "set");
}

std::string serialize_suite(const std::vector<InterventionPtr>& suite) {
    json j;
    j["format"] = "cam/1";
    j["kind"] = "suite";
    json items = json::array();
    for (const auto& iv : suite) {
        if (!iv->is_hard()) throw TypeMismatch("only hard interventions serialize in suites");
        items.push_back(json{{"set", setting_to_json(iv->hard_part().values)}});
    }
    j["interventions"] = items;
    return dump(j);
}

std::string serialize_setting(const Setting& s) {
    json j;
    j["format"] = "cam/1";
    j["kind"] = "setting";
    j["set"] = setting_to_json(s);
    return dump(j);
}

std::string serialize_report(const AbstractionReport& r) {
    json j;
    j["suite_size"] = r.suite_size;
    j["passed"] = r.passed;
    json failures = json::array();
    for (const auto& f : r.failures) {
        json expected = json::array();
        for (const auto& s : f.expected) expected.push_back(setting_to_json(s));
        json actual = json::array();
        for (const auto& s : f.actual) actual.push_back(setting_to_json(s));
        failures.push_back(json{{"intervention", f.low_intervention},
                                {"expected", expected},
                                {"actual", actual}});
    }
    j["failures"] = failures;
    return dump(j);
}

std::string canonicalize(const std::string& text) { return dump(parse_json(text)); }

ValueMergeFamily parse_value_merge(const std::string& text, const SignaturePtr& sig) {
    json j = parse_json(text);
    ValueMergeFamily family;
    try {
        for (const auto& [var, body] : j.at("maps").items()) {
            if (!sig->find(var))
                throw UndeclaredVariable("value merge references undeclared variable " + var);
            if (body.value("identity", false)) continue;
            std::vector<std::pair<Value, Value>> entries;
            for (const auto& row : body.at("table"))
                entries.emplace_back(value_from_json(row[0], "maps." + var),
                                     value_from_json(row[1], "maps." + var));
            ValueRange codomain = ValueRange::real(1);
            const auto& cd = body.at("codomain");
            if (cd.contains("values")) {
                std::vector<Value> vals;
                for (const auto& v : cd.at("values"))
                    vals.push_back(value_from_json(v, "maps." + var + ".codomain"));
                codomain = ValueRange::enumerated(std::move(vals));
            } else {
                codomain = ValueRange::real(cd.value("real", 1));
            }
            family.maps.emplace_back(
                var, ValueMap{CellMap::table(std::move(entries)), codomain, false});
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed value-merge document: ") + e.what());
    }
    return family;
}

std::map<std::string, std::string> parse_var_map(const std::string& text) {
    json j = parse_json(text);
    std::map<std::string, std::string> out;
    try {
        for (const auto& [lo, hi] : j.at("map").items()) out[lo] = hi.get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed variable-map document: ") + e.what());
    }
    return out;
}

std::string serialize_solutions(const std::vector<Setting>& sols) {
    json j;
    j["solutions"] = json::array();
    for (const auto& s : sols) j["solutions"].push_back(setting_to_json(s));
    return dump(j);
}

CausalModel materialize_tables(const CausalModel& m, uint64_t budget) {
    if (budget == 0) budget = global_budget();
    std::vector<Mechanism> mechs;
    for (VarId v = 0; v < m.sig()->size(); ++v) {
        const auto& mech = m.mechanism(v);
        if (mech.expr()) {
            mechs.push_back(mech);
            continue;
        }
        std::vector<VarId> parents;
        for (const auto& p : mech.parent_names()) parents.push_back(m.sig()->id(p));
        std::vector<TableRow> rows;
        for_each_assignment(m.sig(), parents, budget, [&](const Setting& s) {
            rows.push_back(TableRow{project(s, parents), mech.eval(s, m.tolerance())});
        });
        mechs.push_back(Mechanism::expression(
            Expr::table(std::move(rows), false, Value(0.0))));
    }
    return CausalModel(m.sig(), std::move(mechs), m.tolerance(), m.name());
}

} // namespace dsl
} // namespace cak
