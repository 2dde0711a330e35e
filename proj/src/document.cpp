// Copyright 2026 The FedTensor Authors
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

#include "fedtensor/document.hpp"

#include <json.hpp>

namespace fedtensor {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string &msg) {
  throw FormatError("schema error: " + msg);
}

json parse_text(const std::string &text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &err) {
    // translate the byte offset into line/column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < err.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw FormatError("parse error at line " + std::to_string(line) +
                      ", column " + std::to_string(col) + ": " + err.what());
  }
}

Shape shape_from_json(const json &j, const std::string &what) {
  if (!j.is_array()) schema_error(what + " must be an array of extents");
  std::vector<std::int64_t> dims;
  for (const auto &d : j) {
    if (!d.is_number_integer() || d.get<std::int64_t>() < 0) {
      schema_error(what + " extents must be nonnegative integers");
    }
    dims.push_back(d.get<std::int64_t>());
  }
  return Shape(std::move(dims));
}

json shape_to_json(const Shape &s) { return json(s.dims()); }

TensorValue tensor_from_json(const json &j, const std::string &what) {
  if (j.is_number()) return TensorValue::scalar(j.get<double>());
  if (!j.is_object() || !j.contains("shape") || !j.contains("values")) {
    schema_error(what + " must be {shape, values} or a number");
  }
  const Shape shape = shape_from_json(j["shape"], what + ".shape");
  if (!j["values"].is_array()) schema_error(what + ".values must be an array");
  std::vector<double> values;
  for (const auto &v : j["values"]) {
    if (!v.is_number()) schema_error(what + ".values must be numbers");
    values.push_back(v.get<double>());
  }
  try {
    return TensorValue(shape, std::move(values));
  } catch (const ValueError &err) {
    schema_error(what + ": " + err.what());
  }
}

json tensor_to_json(const TensorValue &t) {
  return json{{"shape", shape_to_json(t.shape())}, {"values", t.data()}};
}

TensorType type_from_json(const json &j, const std::string &what) {
  if (!j.is_object() || !j.contains("kind")) {
    schema_error(what + " must be a type object with a kind");
  }
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "shared") {
      return TensorType::shared(shape_from_json(j.value("shape", json::array()),
                                                what + ".shape"));
    }
    if (kind == "federated") {
      if (!j.contains("record_axis")) {
        schema_error(what + " federated types need a record_axis");
      }
      return TensorType::federated(
          j["record_axis"].get<int>(),
          shape_from_json(j.value("shape", json::array()), what + ".shape"));
    }
  } catch (const ValueError &err) {
    schema_error(what + ": " + err.what());
  }
  schema_error(what + ".kind must be 'shared' or 'federated'");
}

json type_to_json(const TensorType &t) {
  if (t.is_shared()) {
    return json{{"kind", "shared"}, {"shape", shape_to_json(t.as_shared().shape)}};
  }
  const FedType &f = t.as_federated();
  return json{{"kind", "federated"},
              {"record_axis", f.record_axis},
              {"shape", shape_to_json(f.nonrecord)}};
}

std::optional<UnaryOp> unary_by_name(const std::string &name) {
  for (UnaryOp op : {UnaryOp::Neg, UnaryOp::Abs, UnaryOp::Exp, UnaryOp::Log,
                     UnaryOp::Sqrt, UnaryOp::Square, UnaryOp::Relu,
                     UnaryOp::Sigmoid}) {
    if (name == unary_name(op)) return op;
  }
  return std::nullopt;
}

std::optional<BinaryOp> binary_by_name(const std::string &name) {
  for (BinaryOp op : {BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul,
                      BinaryOp::Div, BinaryOp::Pow}) {
    if (name == binary_name(op)) return op;
  }
  return std::nullopt;
}

std::optional<CompareOp> compare_by_name(const std::string &name) {
  for (CompareOp op : {CompareOp::Lt, CompareOp::Le, CompareOp::Eq,
                       CompareOp::Ge, CompareOp::Gt}) {
    if (name == compare_name(op)) return op;
  }
  return std::nullopt;
}

std::optional<AggSchema> agg_by_name(const std::string &name) {
  for (AggSchema s : {AggSchema::Sum, AggSchema::Min, AggSchema::Max}) {
    if (name == agg_name(s)) return s;
  }
  return std::nullopt;
}

Expr expr_from_json(const json &j) {
  if (j.is_object() && j.contains("var")) {
    return Expr::var(j["var"].get<std::string>());
  }
  if (j.is_object() && j.contains("lit")) {
    return ops::lit(tensor_from_json(j["lit"], "lit"));
  }
  if (!j.is_object() || !j.contains("op")) {
    schema_error("expression must be {var}, {lit} or {op, args}");
  }
  const std::string op = j["op"].get<std::string>();
  std::vector<Expr> args;
  for (const auto &a : j.value("args", json::array())) {
    args.push_back(expr_from_json(a));
  }

  auto expect_args = [&](std::size_t n) {
    if (args.size() != n) {
      schema_error("operation '" + op + "' expects " + std::to_string(n) +
                   " arguments, got " + std::to_string(args.size()));
    }
  };

  try {
    if (const auto u = unary_by_name(op)) {
      expect_args(1);
      return Expr::apply(UnarySymbol{*u}, std::move(args));
    }
    if (const auto b = binary_by_name(op)) {
      expect_args(2);
      return Expr::apply(BinarySymbol{*b}, std::move(args));
    }
    if (const auto c = compare_by_name(op)) {
      expect_args(2);
      return Expr::apply(CompareSymbol{*c}, std::move(args));
    }
    if (const auto s = agg_by_name(op)) {
      expect_args(1);
      if (!j.contains("axis")) schema_error("aggregation needs an axis");
      return Expr::apply(AggSymbol{*s, j["axis"].get<int>()}, std::move(args));
    }
    if (op == "perm") {
      expect_args(1);
      if (!j.contains("perm") || !j["perm"].is_array()) {
        schema_error("perm needs an image list");
      }
      std::vector<int> images;
      for (const auto &v : j["perm"]) images.push_back(v.get<int>());
      return Expr::apply(PermSymbol{Permutation(std::move(images))},
                         std::move(args));
    }
    if (op == "matmul_fed_sh") {
      expect_args(2);
      return Expr::apply(MatMulFedShSymbol{}, std::move(args));
    }
    if (op == "matmul_sh_fed") {
      expect_args(2);
      return Expr::apply(MatMulShFedSymbol{}, std::move(args));
    }
    if (op == "matmul_fed_fed") {
      expect_args(2);
      return Expr::apply(MatMulFedFedSymbol{}, std::move(args));
    }
  } catch (const ValueError &err) {
    schema_error(err.what());
  } catch (const TypeCheckError &err) {
    schema_error(err.what());
  }

  // Anything else must be a registered extension primitive.
  if (!builtin_registry().contains(op) && !default_registry().contains(op)) {
    schema_error("unknown operation '" + op + "'");
  }
  return Expr::apply(ExtSymbol{op}, std::move(args));
}

json expr_to_json(const Expr &e) {
  if (e.is_var()) return json{{"var", e.var_name()}};
  const PrimitiveSymbol &sym = e.symbol();
  if (const auto *lit = std::get_if<LiteralSymbol>(&sym)) {
    return json{{"lit", tensor_to_json(lit->value)}};
  }
  json out;
  if (const auto *agg = std::get_if<AggSymbol>(&sym)) {
    out["op"] = agg_name(agg->schema);
    out["axis"] = agg->axis;
  } else if (const auto *perm = std::get_if<PermSymbol>(&sym)) {
    out["op"] = "perm";
    out["perm"] = perm->perm.images();
  } else {
    out["op"] = symbol_name(sym);
  }
  json args = json::array();
  for (const Expr &a : e.args()) args.push_back(expr_to_json(a));
  out["args"] = std::move(args);
  return out;
}

ProgramComponent component_from_json(const json &j) {
  if (!j.is_object() || !j.contains("name") || !j.contains("form")) {
    schema_error("components must be {name, form, ...}");
  }
  ProgramComponent comp;
  comp.name = j["name"].get<std::string>();
  const std::string form = j["form"].get<std::string>();
  if (form == "agg") {
    if (!j.contains("schema") || !j.contains("expr")) {
      schema_error("agg components need {schema, expr}");
    }
    const auto schema = agg_by_name(j["schema"].get<std::string>());
    if (!schema) schema_error("unknown aggregation schema");
    comp.form = AggComponent{expr_from_json(j["expr"]), *schema};
  } else if (form == "mat") {
    if (!j.contains("a") || !j.contains("b")) {
      schema_error("mat components need {a, b}");
    }
    comp.form = MatComponent{expr_from_json(j["a"]), expr_from_json(j["b"])};
  } else {
    schema_error("component form must be 'agg' or 'mat'");
  }
  return comp;
}

json component_to_json(const ProgramComponent &comp) {
  json out{{"name", comp.name}};
  if (const auto *agg = std::get_if<AggComponent>(&comp.form)) {
    out["form"] = "agg";
    out["schema"] = agg_name(agg->schema);
    out["expr"] = expr_to_json(agg->expr);
  } else {
    const auto &mat = std::get<MatComponent>(comp.form);
    out["form"] = "mat";
    out["a"] = expr_to_json(mat.a);
    out["b"] = expr_to_json(mat.b);
  }
  return out;
}

} // namespace

std::pair<std::string, FedType> ProgramDocument::federated_input() const {
  for (const auto &[name, type] : inputs) {
    if (type.is_federated()) return {name, type.as_federated()};
  }
  schema_error("program has no federated input");
}

std::vector<std::pair<std::string, Shape>> ProgramDocument::shared_inputs()
    const {
  std::vector<std::pair<std::string, Shape>> out;
  for (const auto &[name, type] : inputs) {
    if (type.is_shared()) out.emplace_back(name, type.as_shared().shape);
  }
  return out;
}

ProgramDocument load_program(const std::string &text) {
  const json j = parse_text(text);
  if (!j.is_object()) schema_error("program document must be an object");

  ProgramDocument doc;
  doc.version = j.value("version", 1);
  if (doc.version != 1) schema_error("unsupported document version");

  const std::string kind = j.value("kind", "");
  if (kind == "expr") {
    doc.kind = ProgramDocument::Kind::Expr;
  } else if (kind == "one-round") {
    doc.kind = ProgramDocument::Kind::OneRound;
  } else if (kind == "iterative") {
    doc.kind = ProgramDocument::Kind::Iterative;
  } else {
    schema_error("kind must be 'expr', 'one-round' or 'iterative'");
  }

  if (!j.contains("inputs") || !j["inputs"].is_array()) {
    schema_error("program needs an inputs array");
  }
  for (const auto &input : j["inputs"]) {
    if (!input.is_object() || !input.contains("name") ||
        !input.contains("type")) {
      schema_error("inputs must be {name, type}");
    }
    doc.inputs.emplace_back(input["name"].get<std::string>(),
                            type_from_json(input["type"], "input type"));
  }

  if (doc.kind == ProgramDocument::Kind::Expr) {
    if (!j.contains("body")) schema_error("expr programs need a body");
    doc.body = expr_from_json(j["body"]);
    return doc;
  }

  int federated_inputs = 0;
  for (const auto &[name, type] : doc.inputs) {
    (void)name;
    federated_inputs += type.is_federated() ? 1 : 0;
  }
  if (federated_inputs != 1) {
    schema_error("one-round and iterative programs take exactly one "
                 "federated input");
  }

  if (!j.contains("components") || !j["components"].is_array() ||
      j["components"].empty()) {
    schema_error("program needs a nonempty components array");
  }
  for (const auto &c : j["components"]) {
    doc.components.push_back(component_from_json(c));
  }
  if (!j.contains("decoder")) schema_error("program needs a decoder");
  doc.decoder = expr_from_json(j["decoder"]);

  if (doc.kind == ProgramDocument::Kind::Iterative) {
    if (!j.contains("state") || !j["state"].is_object()) {
      schema_error("iterative programs need a state object");
    }
    const json &state = j["state"];
    doc.state_name = state.value("name", "theta");
    if (!state.contains("init")) schema_error("state needs an init tensor");
    doc.initial_state = tensor_from_json(state["init"], "state.init");
    doc.rounds = state.value("rounds", 1);
    if (doc.rounds < 1) schema_error("state.rounds must be >= 1");
  }
  return doc;
}

std::string save_program(const ProgramDocument &doc) {
  json j;
  j["version"] = doc.version;
  json inputs = json::array();
  for (const auto &[name, type] : doc.inputs) {
    inputs.push_back(json{{"name", name}, {"type", type_to_json(type)}});
  }
  j["inputs"] = std::move(inputs);
  switch (doc.kind) {
  case ProgramDocument::Kind::Expr:
    j["kind"] = "expr";
    j["body"] = expr_to_json(*doc.body);
    break;
  case ProgramDocument::Kind::Iterative:
    j["kind"] = "iterative";
    j["state"] = json{{"name", doc.state_name},
                      {"init", tensor_to_json(doc.initial_state)},
                      {"rounds", doc.rounds}};
    [[fallthrough]];
  case ProgramDocument::Kind::OneRound: {
    if (doc.kind == ProgramDocument::Kind::OneRound) j["kind"] = "one-round";
    json comps = json::array();
    for (const auto &c : doc.components) comps.push_back(component_to_json(c));
    j["components"] = std::move(comps);
    j["decoder"] = expr_to_json(*doc.decoder);
    break;
  }
  }
  return j.dump(2) + "\n";
}

OneRoundProgram to_one_round(const ProgramDocument &doc) {
  if (doc.kind != ProgramDocument::Kind::OneRound) {
    schema_error("document is not a one-round program");
  }
  OneRoundProgram p;
  const auto [name, type] = doc.federated_input();
  p.input_name = name;
  p.input_type = type;
  p.shared_params = doc.shared_inputs();
  p.components = doc.components;
  p.decoder = *doc.decoder;
  return p;
}

IterativeProgram to_iterative(const ProgramDocument &doc) {
  if (doc.kind != ProgramDocument::Kind::Iterative) {
    schema_error("document is not an iterative program");
  }
  if (!doc.shared_inputs().empty()) {
    schema_error("iterative documents bind only the state as a shared input");
  }
  IterativeProgram p;
  const auto [name, type] = doc.federated_input();
  p.input_name = name;
  p.input_type = type;
  p.state_name = doc.state_name;
  p.initial_state = doc.initial_state;
  p.rounds = doc.rounds;
  const Round round{doc.components, *doc.decoder};
  p.round_at = [round](int) { return round; };
  return p;
}

DataDocument load_data(const std::string &text) {
  const json j = parse_text(text);
  if (!j.is_object()) schema_error("data document must be an object");
  DataDocument doc;
  if (!j.contains("federation") || !j["federation"].is_array() ||
      j["federation"].empty()) {
    schema_error("data needs a nonempty federation array");
  }
  for (const auto &c : j["federation"]) {
    doc.federation.push_back(c.get<std::string>());
  }
  for (const auto &[client, tensors] : j.value("clients", json::object()).items()) {
    for (const auto &[name, tensor] : tensors.items()) {
      doc.client_tensors[client][name] =
          tensor_from_json(tensor, "clients." + client + "." + name);
    }
  }
  for (const auto &[name, tensor] : j.value("shared", json::object()).items()) {
    doc.shared[name] = tensor_from_json(tensor, "shared." + name);
  }
  return doc;
}

std::string save_data(const DataDocument &doc) {
  json j;
  j["federation"] = doc.federation;
  json clients = json::object();
  for (const auto &[client, tensors] : doc.client_tensors) {
    json entry = json::object();
    for (const auto &[name, tensor] : tensors) {
      entry[name] = tensor_to_json(tensor);
    }
    clients[client] = std::move(entry);
  }
  j["clients"] = std::move(clients);
  json shared = json::object();
  for (const auto &[name, tensor] : doc.shared) {
    shared[name] = tensor_to_json(tensor);
  }
  j["shared"] = std::move(shared);
  return j.dump(2) + "\n";
}

Environment build_environment(
    const DataDocument &data,
    const std::vector<std::pair<std::string, TensorType>> &inputs) {
  Environment env;
  Federation fed = [&] {
    try {
      return Federation(data.federation);
    } catch (const ValueError &err) {
      schema_error(err.what());
    }
  }();

  for (const auto &[name, type] : inputs) {
    if (type.is_shared()) {
      const auto it = data.shared.find(name);
      if (it == data.shared.end()) {
        schema_error("missing shared input '" + name + "'");
      }
      if (it->second.shape() != type.as_shared().shape) {
        schema_error("shared input '" + name + "' has shape " +
                     it->second.shape().str() + ", expected " +
                     type.as_shared().shape.str());
      }
      env.bind(name, Value(it->second));
      continue;
    }
    const FedType &f = type.as_federated();
    std::vector<TensorValue> locals;
    for (const std::string &client : data.federation) {
      const auto ct = data.client_tensors.find(client);
      if (ct == data.client_tensors.end() || !ct->second.count(name)) {
        schema_error("client '" + client + "' is missing tensor '" + name +
                     "'");
      }
      locals.push_back(ct->second.at(name));
    }
    try {
      env.bind(name, Value(FederatedValue(fed, f.record_axis, f.nonrecord,
                                          std::move(locals))));
    } catch (const ValueError &err) {
      schema_error("federated input '" + name + "': " + err.what());
    }
  }
  return env;
}

Expr expr_from_json_text(const std::string &text) {
  return expr_from_json(parse_text(text));
}

std::string expr_to_json_text(const Expr &e) {
  return expr_to_json(e).dump(2) + "\n";
}

} // namespace fedtensor
