#include <algorithm>
#include <array>
#include <map>

#include "templates.hpp"
#include "vulnbench/error.hpp"

namespace vulnbench::corpus::detail {
namespace {

enum class Rel { eq, le };

enum class Style { assert_chain, reject_branch, and_chain, group, reversed, bz_err };

struct Check {
  std::string_view category;  // empty for fields no category is about
  std::string field;
  Rel rel;
  std::string teal_rhs;
  std::string py_field;
  std::string py_rhs;
};

const Check kRekey{"unchecked_rekey_to", "RekeyTo", Rel::eq, "global ZeroAddress", "rekey_to",
                   "Global.zero_address()"};
const Check kCloseRemainder{"unchecked_close_remainder_to", "CloseRemainderTo", Rel::eq,
                            "global ZeroAddress", "close_remainder_to", "Global.zero_address()"};
const Check kAssetClose{"unchecked_asset_close_to", "AssetCloseTo", Rel::eq, "global ZeroAddress",
                        "asset_close_to", "Global.zero_address()"};
const Check kFee{"unchecked_transaction_fee", "Fee", Rel::le, "int ${max_fee}", "fee",
                 "Int(${max_fee})"};

Check receiver_check(std::string_view field_category, bool pinned) {
  const bool payment = field_category == "unchecked_payment_receiver";
  Check c{field_category,
          payment ? "Receiver" : "AssetReceiver",
          Rel::eq,
          pinned ? "addr ${receiver}" : "global ZeroAddress",
          payment ? "receiver" : "asset_receiver",
          pinned ? "Addr(\"${receiver}\")" : "Global.zero_address()"};
  return c;
}

bool is_app_category(std::string_view category) {
  return category == "arbitrary_update" || category == "arbitrary_delete";
}

bool uses_asset_escrow(std::string_view category, int variant) {
  if (category == "unchecked_asset_receiver" || category == "unchecked_asset_close_to") return true;
  if (category == "unchecked_payment_receiver" || category == "unchecked_close_remainder_to") {
    return false;
  }
  return variant % 2 == 1;
}

std::vector<Check> rotate(std::vector<Check> checks, std::size_t offset) {
  if (!checks.empty()) {
    std::rotate(checks.begin(), checks.begin() + static_cast<long>(offset % checks.size()),
                checks.end());
  }
  return checks;
}

// Field checks that follow the transaction-type check, in canonical order.
std::vector<Check> escrow_checks(bool asset) {
  std::vector<Check> out;
  if (asset) {
    out.push_back({"", "XferAsset", Rel::eq, "int ${asset_id}", "xfer_asset", "Int(${asset_id})"});
    out.push_back(receiver_check("unchecked_asset_receiver", true));
    out.push_back({"", "AssetAmount", Rel::le, "int ${max_amount}", "asset_amount",
                   "Int(${max_amount})"});
    out.push_back(receiver_check("unchecked_payment_receiver", false));
  } else {
    out.push_back(receiver_check("unchecked_payment_receiver", true));
    out.push_back({"", "Amount", Rel::le, "int ${max_amount}", "amount", "Int(${max_amount})"});
    out.push_back(receiver_check("unchecked_asset_receiver", false));
  }
  out.push_back(kCloseRemainder);
  out.push_back(kAssetClose);
  out.push_back(kRekey);
  out.push_back(kFee);
  return out;
}

std::vector<Check> app_checks() {
  return {kRekey,
          kCloseRemainder,
          kAssetClose,
          receiver_check("unchecked_payment_receiver", false),
          receiver_check("unchecked_asset_receiver", false),
          kFee};
}

Check type_check(bool asset) {
  return {"", "TypeEnum", Rel::eq, asset ? "int axfer" : "int pay", "type_enum",
          asset ? "TxnType.AssetTransfer" : "TxnType.Payment"};
}

struct Emitter {
  SourceBuilder& teal;
  SourceBuilder& py;
  Style style;
  std::string_view category;
  std::string py_indent;

  void check(const Check& c, bool first) {
    const bool tested = !c.category.empty() && c.category == category;
    const bool eq = c.rel == Rel::eq;
    const std::string read = (style == Style::group ? "gtxn 0 " : "txn ") + c.field;
    const std::string py_lhs = (style == Style::group ? "Gtxn[0]." : "Txn.") + c.py_field + "()";
    auto t = [&](const std::string& line) { teal.guard(line, tested); };
    auto p = [&](const std::string& line) { py.guard(py_indent + line, tested); };
    switch (style) {
      case Style::assert_chain:
      case Style::group:
        t(read);
        t(c.teal_rhs);
        t(eq ? "==" : "<=");
        t("assert");
        p("Assert(" + py_lhs + (eq ? " == " : " <= ") + c.py_rhs + "),");
        break;
      case Style::reversed:
        t(c.teal_rhs);
        t(read);
        t(eq ? "==" : ">=");
        t("assert");
        p("Assert(" + c.py_rhs + (eq ? " == " : " >= ") + py_lhs + "),");
        break;
      case Style::reject_branch:
        t(read);
        t(c.teal_rhs);
        t(eq ? "!=" : ">");
        t("bnz reject");
        p("If(" + py_lhs + (eq ? " != " : " > ") + c.py_rhs + ").Then(Reject()),");
        break;
      case Style::and_chain:
        t(read);
        t(c.teal_rhs);
        t(eq ? "==" : "<=");
        if (!first) t("&&");
        p(py_lhs + (eq ? " == " : " <= ") + c.py_rhs + ",");
        break;
      case Style::bz_err:
        t(read);
        t(c.teal_rhs);
        t(eq ? "==" : "<=");
        t("bz fail");
        p("If(Not(" + py_lhs + (eq ? " == " : " <= ") + c.py_rhs + ")).Then(Err()),");
        break;
    }
  }
};

void teal_epilogue(SourceBuilder& teal, Style style) {
  if (style == Style::reject_branch) {
    teal.add("reject:");
    teal.add("int 0");
    teal.add("return");
  } else if (style == Style::bz_err) {
    teal.add("fail:");
    teal.add("err");
  }
}

void py_main(SourceBuilder& py, std::string_view mode) {
  py.blank();
  py.blank();
  py.add("if __name__ == \"__main__\":");
  py.add("    print(compileTeal(${fn_name}(), mode=Mode." + std::string(mode) +
         ", version=${version}))");
}

TemplatePair escrow(std::string_view category, int variant, const ParamReader& params) {
  static constexpr std::array<Style, 5> styles = {Style::assert_chain, Style::reject_branch,
                                                  Style::and_chain, Style::group, Style::bz_err};
  const Style style = styles[static_cast<std::size_t>(variant)];
  const bool asset = uses_asset_escrow(category, variant);
  const auto checks = rotate(escrow_checks(asset), std::stoul(params("order")));

  SourceBuilder teal(params), py(params);
  teal.add("#pragma version ${version}");
  py.add("from pyteal import *");
  py.blank();
  py.blank();
  py.add("def ${fn_name}():");
  Emitter em{teal, py, style, category, "        "};
  if (style == Style::and_chain) {
    py.add("    return And(");
  } else {
    py.add("    return Seq(");
  }
  if (style == Style::group) {
    teal.add("global GroupSize");
    teal.add("int 1");
    teal.add("==");
    teal.add("assert");
    py.add("        Assert(Global.group_size() == Int(1)),");
  }
  em.check(type_check(asset), true);
  for (const auto& c : checks) em.check(c, false);
  if (style == Style::and_chain) {
    teal.add("return");
  } else {
    teal.add("int 1");
    teal.add("return");
    py.add("        Approve(),");
  }
  py.add("    )");
  teal_epilogue(teal, style);
  py_main(py, "Signature");
  return {py.take(), teal.take()};
}

struct SenderGuard {
  std::vector<std::string> teal;
  std::string py;
};

SenderGuard sender_guard(int variant) {
  switch (variant) {
    case 1:
      return {{"txn Sender", "addr ${owner}", "!=", "bnz reject"},
              "If(Txn.sender() != Addr(\"${owner}\")).Then(Reject()),"};
    case 3:
      return {{"addr ${owner}", "txn Sender", "==", "assert"},
              "Assert(Addr(\"${owner}\") == Txn.sender()),"};
    case 4:
      return {{"txn Sender", "global CreatorAddress", "==", "bz fail"},
              "If(Not(Txn.sender() == Global.creator_address())).Then(Err()),"};
    default:
      return {{"txn Sender", "global CreatorAddress", "==", "assert"},
              "Assert(Txn.sender() == Global.creator_address()),"};
  }
}

void app_handler(SourceBuilder& teal, SourceBuilder& py, std::string_view label, int variant,
                 bool tested) {
  teal.add(std::string(label) + ":");
  if (variant == 2) {
    for (const auto* line : {"txn Sender", "global CreatorAddress", "==", "return"}) {
      teal.guard(line, tested);
    }
    if (tested) {
      teal.add("int 1", LineTag::vuln_only);
      teal.add("return", LineTag::vuln_only);
    }
    py.guard("    " + std::string(label) + " = Return(Txn.sender() == Global.creator_address())",
             tested);
    if (tested) py.add("    " + std::string(label) + " = Approve()", LineTag::vuln_only);
    py.blank();
    return;
  }
  const auto g = sender_guard(variant);
  for (const auto& line : g.teal) teal.guard(line, tested);
  teal.add("int 1");
  teal.add("return");
  py.add("    " + std::string(label) + " = Seq(");
  py.guard("        " + g.py, tested);
  py.add("        Approve(),");
  py.add("    )");
  py.blank();
}

TemplatePair application(std::string_view category, int variant, const ParamReader& params) {
  static constexpr std::array<Style, 5> styles = {Style::assert_chain, Style::reject_branch,
                                                  Style::and_chain, Style::reversed,
                                                  Style::bz_err};
  const Style style = styles[static_cast<std::size_t>(variant)];
  const auto checks = rotate(app_checks(), std::stoul(params("order")));

  SourceBuilder teal(params), py(params);
  teal.add("#pragma version ${version}");
  py.add("from pyteal import *");
  py.blank();
  py.blank();
  py.add("def ${fn_name}():");
  py.add("    counter_key = Bytes(\"${counter}\")");
  py.blank();
  py.add("    on_call = Seq(");
  py.add("        App.globalPut(counter_key, App.globalGet(counter_key) + Int(1)),");
  py.add("        Approve(),");
  py.add("    )");
  py.blank();

  // The prologue hardens every field rule so only the handler guard varies.
  std::vector<TaggedLine> prologue_py;
  {
    SourceBuilder scratch(params);
    Emitter pe{teal, scratch, style, category,
               style == Style::and_chain ? "            " : "        "};
    for (std::size_t i = 0; i < checks.size(); ++i) pe.check(checks[i], i == 0);
    if (style == Style::and_chain) teal.add("assert");
    prologue_py = scratch.take().lines;
  }

  teal.add("txn OnCompletion");
  teal.add("int NoOp");
  teal.add("==");
  teal.add("bnz on_call");
  teal.add("txn OnCompletion");
  teal.add("int UpdateApplication");
  teal.add("==");
  teal.add("bnz on_update");
  teal.add("txn OnCompletion");
  teal.add("int DeleteApplication");
  teal.add("==");
  teal.add("bnz on_delete");
  teal.add("err");
  teal.add("on_call:");
  teal.add("byte \"${counter}\"");
  teal.add("byte \"${counter}\"");
  teal.add("app_global_get");
  teal.add("int 1");
  teal.add("+");
  teal.add("app_global_put");
  teal.add("int 1");
  teal.add("return");

  app_handler(teal, py, "on_update", variant, category == "arbitrary_update");
  app_handler(teal, py, "on_delete", variant, category == "arbitrary_delete");
  teal_epilogue(teal, style);

  py.add("    return Seq(");
  if (style == Style::and_chain) py.add("        Assert(And(");
  for (const auto& line : prologue_py) py.add(line.text, line.tag);
  if (style == Style::and_chain) py.add("        )),");
  py.add("        Cond(");
  py.add("            [Txn.on_completion() == OnComplete.NoOp, on_call],");
  py.add("            [Txn.on_completion() == OnComplete.UpdateApplication, on_update],");
  py.add("            [Txn.on_completion() == OnComplete.DeleteApplication, on_delete],");
  py.add("        ),");
  py.add("    )");
  py_main(py, "Application");
  return {py.take(), teal.take()};
}

std::string random_address(std::mt19937_64& rng) {
  static constexpr std::string_view alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
  std::string out;
  for (int i = 0; i < 58; ++i) out += alphabet[pick(rng, alphabet.size())];
  return out;
}

}  // namespace

const std::map<std::string, std::vector<std::string>>& algorand_pools() {
  static const std::map<std::string, std::vector<std::string>> pools = {
      {"fn_name",
       {"approval_program", "escrow_logic", "contract_logic", "guarded_program", "vault_program"}},
      {"counter", {"counter", "calls", "total_calls", "invocations", "hits"}},
  };
  return pools;
}

Params algorand_params(std::string_view category, int variant, std::mt19937_64& rng) {
  (void)variant;
  Params p;
  p["version"] = std::to_string(6 + pick(rng, 3));
  p["fn_name"] = pick_from(rng, algorand_pools().at("fn_name"));
  p["max_fee"] = std::to_string(1000 * (1 + pick(rng, 5)));
  if (is_app_category(category)) {
    p["order"] = std::to_string(pick(rng, app_checks().size()));
    p["owner"] = random_address(rng);
    p["counter"] = pick_from(rng, algorand_pools().at("counter"));
  } else {
    p["order"] = std::to_string(pick(rng, 7));
    p["receiver"] = random_address(rng);
    p["asset_id"] = std::to_string(10000000 + pick(rng, 900000000));
    p["max_amount"] = std::to_string(1000000 * (1 + pick(rng, 50)));
  }
  return p;
}

TemplatePair algorand_template(std::string_view category, int variant, const ParamReader& params) {
  if (is_app_category(category)) return application(category, variant, params);
  return escrow(category, variant, params);
}

}  // namespace vulnbench::corpus::detail
