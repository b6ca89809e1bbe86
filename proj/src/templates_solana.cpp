#include <map>

#include "templates.hpp"

namespace vulnbench::corpus::detail {
namespace {

bool withdraws(int variant) { return variant == 1 || variant == 3; }
bool split_handler(int variant) { return variant == 1 || variant == 3; }
bool custom_errors(int variant) { return variant == 2; }

struct Errors {
  bool custom;

  std::string operator()(std::string_view program_error, std::string_view custom_error) const {
    if (custom) return "return Err(${state}Error::" + std::string(custom_error) + ".into());";
    return "return Err(ProgramError::" + std::string(program_error) + ");";
  }
};

void header(SourceBuilder& b, std::string_view category, int variant) {
  b.add("use borsh::{BorshDeserialize, BorshSerialize};");
  if (category == "cpi_unchecked") {
    b.add("use solana_program::instruction::{AccountMeta, Instruction};");
    b.add("use solana_program::program::invoke;");
  }
  b.add("use solana_program::{");
  b.add("    account_info::{next_account_info, AccountInfo},");
  b.add("    entrypoint,");
  b.add("    entrypoint::ProgramResult,");
  b.add("    msg,");
  b.add("    program_error::ProgramError,");
  b.add("    pubkey::Pubkey,");
  b.add("};");
  b.blank();
  b.add("const ${tag_name}: u8 = ${tag};");
  if (category == "cpi_unchecked") {
    b.add("const ${known_program}: Pubkey = solana_program::pubkey!(\"${known_program_id}\");");
  }
  b.blank();
  b.add("#[derive(BorshSerialize, BorshDeserialize)]");
  b.add("pub struct ${state} {");
  b.add("    pub authority: Pubkey,");
  b.add("    pub ${field}: u64,");
  b.add("    pub bump: u8,");
  b.add("}");
  b.blank();
  if (custom_errors(variant)) {
    b.add("#[derive(Debug, Clone, Copy)]");
    b.add("pub enum ${state}Error {");
    b.add("    Unauthorized,");
    b.add("    Overflow,");
    b.add("    WrongAccountType,");
    b.add("}");
    b.blank();
    b.add("impl From<${state}Error> for ProgramError {");
    b.add("    fn from(e: ${state}Error) -> Self {");
    b.add("        ProgramError::Custom(e as u32)");
    b.add("    }");
    b.add("}");
    b.blank();
  }
  b.add("entrypoint!(process_instruction);");
  b.blank();
}

void integer_update(SourceBuilder& b, int variant, bool tested) {
  switch (variant) {
    case 0:
      b.guard("    state.${field} = state.${field}", tested);
      b.guard("        .checked_add(${amount})", tested);
      b.guard("        .ok_or(ProgramError::ArithmeticOverflow)?;", tested);
      if (tested) b.add("    state.${field} += ${amount};", LineTag::vuln_only);
      break;
    case 1:
      b.guard("    if ${amount} > state.${field} {", tested);
      b.guard("        return Err(ProgramError::InsufficientFunds);", tested);
      b.guard("    }", tested);
      b.add("    state.${field} -= ${amount};");
      break;
    case 2:
      b.guard("    state.${field} = state.${field}", tested);
      b.guard("        .checked_add(${amount})", tested);
      b.guard("        .ok_or(ProgramError::from(${state}Error::Overflow))?;", tested);
      if (tested) b.add("    state.${field} = state.${field} + ${amount};", LineTag::vuln_only);
      break;
    case 3:
      b.guard("    state.${field} = state.${field}", tested);
      b.guard("        .checked_sub(${amount})", tested);
      b.guard("        .ok_or(ProgramError::InsufficientFunds)?;", tested);
      if (tested) b.add("    state.${field} -= ${amount};", LineTag::vuln_only);
      break;
    default:
      b.guard("    if state.${field} > u64::MAX - ${amount} {", tested);
      b.guard("        return Err(ProgramError::ArithmeticOverflow);", tested);
      b.guard("    }", tested);
      b.add("    state.${field} += ${amount};");
      break;
  }
}

TaggedSource program(std::string_view category, int variant, const ParamReader& params) {
  SourceBuilder b(params);
  const Errors err{custom_errors(variant)};
  const bool cpi = category == "cpi_unchecked";
  const bool pda = category == "bump_seed";
  auto tested = [&](std::string_view c) { return category == c; };

  header(b, category, variant);
  const std::string fn = split_handler(variant) ? "${handler}" : "process_instruction";
  if (split_handler(variant)) {
    b.add("pub fn process_instruction(");
    b.add("    program_id: &Pubkey,");
    b.add("    accounts: &[AccountInfo],");
    b.add("    instruction_data: &[u8],");
    b.add(") -> ProgramResult {");
    b.add("    ${handler}(program_id, accounts, instruction_data)");
    b.add("}");
    b.blank();
  }
  b.add("pub fn " + fn + "(");
  b.add("    program_id: &Pubkey,");
  b.add("    accounts: &[AccountInfo],");
  b.add("    instruction_data: &[u8],");
  b.add(") -> ProgramResult {");
  b.add("    let accounts_iter = &mut accounts.iter();");
  b.add("    let ${authority} = next_account_info(accounts_iter)?;");
  b.add("    let ${vault} = next_account_info(accounts_iter)?;");
  if (cpi) {
    b.add("    let ${destination} = next_account_info(accounts_iter)?;");
    b.add("    let ${callee} = next_account_info(accounts_iter)?;");
  }
  b.blank();
  b.add(pda ? "    if instruction_data.len() < 9 {" : "    if instruction_data.len() < 8 {");
  b.add("        return Err(ProgramError::InvalidInstructionData);");
  b.add("    }");
  b.add("    let ${amount} = u64::from_le_bytes(instruction_data[..8].try_into().unwrap());");
  if (pda) b.add("    let ${bump} = instruction_data[8];");
  b.blank();
  b.add("    if !${authority}.is_signer {");
  b.add("        return Err(ProgramError::MissingRequiredSignature);");
  b.add("    }");
  b.add("    if ${vault}.owner != program_id {");
  b.add("        return Err(ProgramError::IncorrectProgramId);");
  b.add("    }");
  b.blank();
  b.add("    let mut data = ${vault}.try_borrow_mut_data()?;");
  const bool tc = tested("type_confusion");
  b.guard(variant == 3 ? "    if data.first() != Some(&${tag_name}) {" : "    if data[0] != ${tag_name} {",
          tc);
  b.guard("        " + err("InvalidAccountData", "WrongAccountType"), tc);
  b.guard("    }", tc);
  b.add("    let mut state = ${state}::try_from_slice(&data[1..])?;");
  const bool kc = tested("missing_key_check");
  b.guard(variant == 3 ? "    if ${authority}.key != &state.authority {"
                       : "    if state.authority != *${authority}.key {",
          kc);
  b.guard("        " + err("InvalidAccountData", "Unauthorized"), kc);
  b.guard("    }", kc);

  if (pda) {
    b.blank();
    if (variant % 2 == 0) {
      b.guard("    let (_, canonical_bump) =", true);
      b.guard("        Pubkey::find_program_address(&[${seed}, ${authority}.key.as_ref()], program_id);",
              true);
      b.guard("    if ${bump} != canonical_bump {", true);
    } else {
      b.guard("    if ${bump} != state.bump {", true);
    }
    b.guard("        return Err(ProgramError::InvalidSeeds);", true);
    b.guard("    }", true);
    b.add("    let expected = Pubkey::create_program_address(");
    b.add("        &[${seed}, ${authority}.key.as_ref(), &[${bump}]],");
    b.add("        program_id,");
    b.add("    )");
    b.add("    .map_err(|_| ProgramError::InvalidSeeds)?;");
    b.add("    if expected != *${vault}.key {");
    b.add("        return Err(ProgramError::InvalidSeeds);");
    b.add("    }");
  }
  if (cpi) {
    b.blank();
    b.guard(variant % 2 == 0 ? "    if ${callee}.key != &${known_program} {"
                             : "    if *${callee}.key != ${known_program} {",
            true);
    b.guard("        return Err(ProgramError::IncorrectProgramId);", true);
    b.guard("    }", true);
  }

  b.blank();
  integer_update(b, variant, tested("integer_flow"));
  b.add("    state.serialize(&mut &mut data[1..])?;");
  if (cpi) {
    b.add("    drop(data);");
    b.blank();
    b.add("    let ix = Instruction {");
    b.add("        program_id: *${callee}.key,");
    b.add("        accounts: vec![");
    b.add("            AccountMeta::new(*${vault}.key, false),");
    b.add("            AccountMeta::new(*${destination}.key, false),");
    b.add("            AccountMeta::new_readonly(*${authority}.key, true),");
    b.add("        ],");
    b.add("        data: ${amount}.to_le_bytes().to_vec(),");
    b.add("    };");
    b.add("    invoke(");
    b.add("        &ix,");
    b.add("        &[${vault}.clone(), ${destination}.clone(), ${authority}.clone(), ${callee}.clone()],");
    b.add("    )?;");
  }
  b.blank();
  b.add(std::string("    msg!(\"") + (withdraws(variant) ? "withdrew" : "deposited") +
        " {} ({} total)\", ${amount}, state.${field});");
  b.add("    Ok(())");
  b.add("}");
  return b.take();
}

std::string base58(std::mt19937_64& rng, int n) {
  static constexpr std::string_view alphabet =
      "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
  std::string out;
  for (int i = 0; i < n; ++i) out += alphabet[pick(rng, alphabet.size())];
  return out;
}

}  // namespace

const std::map<std::string, std::vector<std::string>>& solana_pools() {
  static const std::map<std::string, std::vector<std::string>> pools = {
      {"authority", {"authority", "admin", "vault_authority", "admin_account", "owner_authority"}},
      {"vault", {"vault", "vault_info", "treasury", "escrow_account", "state_account"}},
      {"state", {"Vault", "Treasury", "Escrow", "Pool", "Reserve"}},
      {"field", {"balance", "total_amount", "lamports", "available_balance", "locked_amount"}},
      {"amount", {"amount", "deposit_amount", "transfer_amount", "amount_in", "requested_amount"}},
      {"handler", {"process_withdraw", "withdraw", "handle_withdraw", "release", "redeem"}},
      {"tag_name", {"VAULT_TAG", "ACCOUNT_TAG", "STATE_DISCRIMINATOR", "VAULT_DISCRIMINATOR",
                    "TYPE_TAG"}},
      {"destination", {"destination", "recipient", "receiver_account", "payout", "beneficiary"}},
      {"callee", {"target_program", "notify_program", "callee", "hook_program", "external_program"}},
      {"known_program", {"TREASURY_PROGRAM_ID", "NOTIFY_PROGRAM_ID", "HOOK_PROGRAM_ID",
                         "LEDGER_PROGRAM_ID", "REGISTRY_PROGRAM_ID"}},
      {"bump", {"bump", "bump_seed", "vault_bump", "pda_bump", "seed_bump"}},
  };
  return pools;
}

Params solana_params(std::string_view category, int variant, std::mt19937_64& rng) {
  const auto& pools = solana_pools();
  Params p;
  for (const auto* key : {"authority", "vault", "state", "field", "amount", "tag_name"}) {
    p[key] = pick_from(rng, pools.at(key));
  }
  p["tag"] = std::to_string(1 + pick(rng, 200));
  if (split_handler(variant)) p["handler"] = pick_from(rng, pools.at("handler"));
  if (category == "cpi_unchecked") {
    for (const auto* key : {"destination", "callee", "known_program"}) {
      p[key] = pick_from(rng, pools.at(key));
    }
    p["known_program_id"] = base58(rng, 44);
  }
  if (category == "bump_seed") {
    p["bump"] = pick_from(rng, pools.at("bump"));
    static const std::vector<std::string> seeds = {"b\"vault\"", "b\"escrow\"", "b\"treasury\"",
                                                   "b\"pool\"", "b\"reserve\""};
    p["seed"] = pick_from(rng, seeds);
  }
  return p;
}

TemplatePair solana_template(std::string_view category, int variant, const ParamReader& params) {
  auto src = program(category, variant, params);
  return {src, src};
}

}  // namespace vulnbench::corpus::detail
