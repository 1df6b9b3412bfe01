//! Transaction model: typed BSQ transactions, the indexed corpus, and the
//! per-transaction amount semantics (burn and issuance).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::amount::{BsqAmount, SatAmount};

/// An opaque address identifier. Cloning is a reference-count bump.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(Arc<str>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("address must be non-empty")]
pub struct EmptyAddress;

impl Address {
    pub fn new(text: &str) -> Result<Self, EmptyAddress> {
        if text.is_empty() {
            return Err(EmptyAddress);
        }
        Ok(Address(Arc::from(text)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Address {
    type Err = EmptyAddress;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Address::new(s)
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        Address::new(&s).map_err(serde::de::Error::custom)
    }
}

/// A 32-byte transaction id, rendered as 64 lowercase hex characters.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Txid(pub [u8; 32]);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("txid must be 64 lowercase hex characters, got {0:?}")]
pub struct BadTxid(pub String);

impl FromStr for Txid {
    type Err = BadTxid;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower_hex = s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if !lower_hex {
            return Err(BadTxid(s.to_string()));
        }
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(s, &mut bytes).map_err(|_| BadTxid(s.to_string()))?;
        Ok(Txid(bytes))
    }
}

impl fmt::Display for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = [0u8; 64];
        hex::encode_to_slice(self.0, &mut buf).expect("fixed size");
        f.write_str(std::str::from_utf8(&buf).expect("hex is ascii"))
    }
}

impl fmt::Debug for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Txid({self})")
    }
}

impl Serialize for Txid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Txid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A reference to one output of one transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutPoint {
    pub txid: Txid,
    pub index: u32,
}

impl fmt::Display for OutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.txid, self.index)
    }
}

/// The BSQ transaction types, plus a container for irregular transactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TxType {
    Genesis,
    TradeFee,
    Transfer,
    CompensationRequest,
    ReimbursementRequest,
    Proposal,
    BlindVote,
    VoteReveal,
    Lockup,
    Unlock,
    AssetListingFee,
    ProofOfBurn,
    Irregular,
}

impl TxType {
    pub const ALL: [TxType; 13] = [
        TxType::Genesis,
        TxType::TradeFee,
        TxType::Transfer,
        TxType::CompensationRequest,
        TxType::ReimbursementRequest,
        TxType::Proposal,
        TxType::BlindVote,
        TxType::VoteReveal,
        TxType::Lockup,
        TxType::Unlock,
        TxType::AssetListingFee,
        TxType::ProofOfBurn,
        TxType::Irregular,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TxType::Genesis => "GENESIS",
            TxType::TradeFee => "TRADE_FEE",
            TxType::Transfer => "TRANSFER",
            TxType::CompensationRequest => "COMPENSATION_REQUEST",
            TxType::ReimbursementRequest => "REIMBURSEMENT_REQUEST",
            TxType::Proposal => "PROPOSAL",
            TxType::BlindVote => "BLIND_VOTE",
            TxType::VoteReveal => "VOTE_REVEAL",
            TxType::Lockup => "LOCKUP",
            TxType::Unlock => "UNLOCK",
            TxType::AssetListingFee => "ASSET_LISTING_FEE",
            TxType::ProofOfBurn => "PROOF_OF_BURN",
            TxType::Irregular => "IRREGULAR",
        }
    }

    /// Whether every input and output of a transaction of this type belongs
    /// to one participant.
    pub fn is_self_transfer(self) -> bool {
        !matches!(self, TxType::Transfer | TxType::Genesis | TxType::Irregular)
    }

    /// Types whose outputs may carry newly minted BSQ.
    pub fn may_issue(self) -> bool {
        matches!(
            self,
            TxType::Genesis | TxType::CompensationRequest | TxType::ReimbursementRequest
        )
    }
}

impl fmt::Display for TxType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown transaction type {0:?}")]
pub struct UnknownTxType(pub String);

impl FromStr for TxType {
    type Err = UnknownTxType;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TxType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownTxType(s.to_string()))
    }
}

pub fn is_self_transfer(t: TxType) -> bool {
    t.is_self_transfer()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxInput {
    pub prev_txid: Txid,
    pub prev_index: u32,
    pub address: Address,
    pub sat: SatAmount,
    pub bsq: BsqAmount,
}

impl TxInput {
    pub fn outpoint(&self) -> OutPoint {
        OutPoint {
            txid: self.prev_txid,
            index: self.prev_index,
        }
    }

    pub fn is_colored(&self) -> bool {
        !self.bsq.is_zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxOutput {
    pub index: u32,
    pub address: Address,
    pub sat: SatAmount,
    pub bsq: BsqAmount,
    pub issuance: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub txid: Txid,
    pub height: u64,
    #[serde(rename = "type")]
    pub tx_type: TxType,
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("transaction {txid} destroys a negative amount: inputs {inputs} < non-issuance outputs {outputs} (centi-BSQ)")]
    NegativeBurn {
        txid: Txid,
        inputs: u128,
        outputs: u128,
    },
    #[error("transaction {txid} burns more BSQ than fits in an amount")]
    BurnOverflow { txid: Txid },
    #[error("transaction {0} is not a transfer")]
    NotATransfer(Txid),
    #[error("transfer {0} has no outputs")]
    NoOutputs(Txid),
}

impl Transaction {
    pub fn input_bsq(&self) -> u128 {
        self.inputs.iter().map(|i| i.bsq.0 as u128).sum()
    }

    pub fn output_bsq(&self) -> u128 {
        self.outputs.iter().map(|o| o.bsq.0 as u128).sum()
    }

    fn non_issuance_output_bsq(&self) -> u128 {
        self.outputs
            .iter()
            .filter(|o| !o.issuance)
            .map(|o| o.bsq.0 as u128)
            .sum()
    }

    pub fn addresses(&self) -> impl Iterator<Item = &Address> {
        self.inputs
            .iter()
            .map(|i| &i.address)
            .chain(self.outputs.iter().map(|o| &o.address))
    }

    pub fn outpoint(&self, index: u32) -> OutPoint {
        OutPoint {
            txid: self.txid,
            index,
        }
    }
}

/// BSQ destroyed by `tx`: colored inputs minus non-issuance colored outputs.
/// Genesis creates BSQ from nothing and burns nothing.
pub fn burn_amount(tx: &Transaction) -> Result<BsqAmount, ModelError> {
    if tx.tx_type == TxType::Genesis {
        return Ok(BsqAmount::ZERO);
    }
    let inputs = tx.input_bsq();
    let outputs = tx.non_issuance_output_bsq();
    let burn = inputs
        .checked_sub(outputs)
        .ok_or(ModelError::NegativeBurn {
            txid: tx.txid,
            inputs,
            outputs,
        })?;
    u64::try_from(burn)
        .map(BsqAmount)
        .map_err(|_| ModelError::BurnOverflow { txid: tx.txid })
}

/// BSQ newly issued by `tx`.
pub fn minted_amount(tx: &Transaction) -> BsqAmount {
    let minted: u128 = tx
        .outputs
        .iter()
        .filter(|o| o.issuance)
        .map(|o| o.bsq.0 as u128)
        .sum();
    BsqAmount(u64::try_from(minted).unwrap_or(u64::MAX))
}

/// The address paid by a transfer: the first output's.
pub fn recipient_of(tx: &Transaction) -> Result<&Address, ModelError> {
    if tx.tx_type != TxType::Transfer {
        return Err(ModelError::NotATransfer(tx.txid));
    }
    tx.outputs
        .first()
        .map(|o| &o.address)
        .ok_or(ModelError::NoOutputs(tx.txid))
}

/// One broken invariant of a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    DuplicateTxid,
    OutputIndexGap {
        position: usize,
        found: u32,
    },
    IssuanceOnWrongType {
        index: u32,
    },
    IssuanceWithoutBsq {
        index: u32,
    },
    UnissuedGenesisOutput {
        index: u32,
    },
    GenesisWithColoredInputs,
    DanglingColoredInput {
        input: usize,
    },
    DanglingInCorpusInput {
        input: usize,
    },
    ColoredInputMismatch {
        input: usize,
        expected: u64,
        found: u64,
    },
    DoubleSpend {
        input: usize,
        spent_by: String,
    },
    NegativeBurn {
        inputs: String,
        outputs: String,
    },
    TransferWithoutInputs,
    TransferWithoutRecipientBsq,
}

impl Violation {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::DuplicateTxid => "DuplicateTxid",
            Violation::OutputIndexGap { .. } => "OutputIndexGap",
            Violation::IssuanceOnWrongType { .. } => "IssuanceOnWrongType",
            Violation::IssuanceWithoutBsq { .. } => "IssuanceWithoutBsq",
            Violation::UnissuedGenesisOutput { .. } => "UnissuedGenesisOutput",
            Violation::GenesisWithColoredInputs => "GenesisWithColoredInputs",
            Violation::DanglingColoredInput { .. } => "DanglingColoredInput",
            Violation::DanglingInCorpusInput { .. } => "DanglingInCorpusInput",
            Violation::ColoredInputMismatch { .. } => "ColoredInputMismatch",
            Violation::DoubleSpend { .. } => "DoubleSpend",
            Violation::NegativeBurn { .. } => "NegativeBurn",
            Violation::TransferWithoutInputs => "TransferWithoutInputs",
            Violation::TransferWithoutRecipientBsq => "TransferWithoutRecipientBsq",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutputIndexGap { position, found } => {
                write!(f, "OutputIndexGap: output at position {position} has index {found}")
            }
            Violation::IssuanceOnWrongType { index }
            | Violation::IssuanceWithoutBsq { index }
            | Violation::UnissuedGenesisOutput { index } => {
                write!(f, "{}: output {index}", self.code())
            }
            Violation::DanglingColoredInput { input } | Violation::DanglingInCorpusInput { input } => {
                write!(f, "{}: input {input}", self.code())
            }
            Violation::ColoredInputMismatch { input, expected, found } => write!(
                f,
                "ColoredInputMismatch: input {input} carries {found} centi-BSQ, spent output carries {expected}"
            ),
            Violation::DoubleSpend { input, spent_by } => {
                write!(f, "DoubleSpend: input {input} already spent by {spent_by}")
            }
            Violation::NegativeBurn { inputs, outputs } => {
                write!(f, "NegativeBurn: inputs {inputs} < outputs {outputs}")
            }
            _ => f.write_str(self.code()),
        }
    }
}

/// Outcome of validating one transaction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A set of transactions ordered by `(height, txid)` with lookup indexes.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    txs: Vec<Transaction>,
    by_txid: HashMap<Txid, usize>,
    spent_by: HashMap<OutPoint, Txid>,
    duplicates: HashSet<Txid>,
}

/// Transactions that failed validation, with their violations.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{} transaction(s) failed validation; first: {}", .failures.len(), first_failure(.failures))]
pub struct ValidationError {
    pub failures: Vec<(Txid, Vec<Violation>)>,
}

fn first_failure(failures: &[(Txid, Vec<Violation>)]) -> String {
    match failures.first() {
        Some((txid, v)) => {
            let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
            format!("{txid}: {}", parts.join("; "))
        }
        None => "none".to_string(),
    }
}

impl Corpus {
    /// Indexes `txs` without validating them.
    pub fn index(mut txs: Vec<Transaction>) -> Corpus {
        txs.sort_by_key(|t| (t.height, t.txid));
        let mut by_txid = HashMap::with_capacity(txs.len());
        let mut duplicates = HashSet::new();
        let mut spent_by = HashMap::new();
        for (pos, tx) in txs.iter().enumerate() {
            if by_txid.insert(tx.txid, pos).is_some() {
                duplicates.insert(tx.txid);
            }
            for input in &tx.inputs {
                spent_by.entry(input.outpoint()).or_insert(tx.txid);
            }
        }
        // `insert` above left the last duplicate; point at the first one.
        for txid in &duplicates {
            let first = txs.iter().position(|t| t.txid == *txid).expect("present");
            by_txid.insert(*txid, first);
        }
        Corpus {
            txs,
            by_txid,
            spent_by,
            duplicates,
        }
    }

    /// Indexes and validates; fails if any transaction is invalid.
    pub fn assemble(txs: Vec<Transaction>) -> Result<Corpus, ValidationError> {
        let corpus = Corpus::index(txs);
        let failures = corpus.failures();
        if failures.is_empty() {
            Ok(corpus)
        } else {
            Err(ValidationError { failures })
        }
    }

    /// Indexes and validates, dropping invalid transactions until the rest is
    /// consistent. Dropping a transaction can orphan colored inputs of its
    /// spenders, so this repeats to a fixpoint.
    pub fn assemble_lenient(txs: Vec<Transaction>) -> (Corpus, Vec<(Txid, Vec<Violation>)>) {
        let mut corpus = Corpus::index(txs);
        let mut rejected = Vec::new();
        loop {
            let failures = corpus.failures();
            if failures.is_empty() {
                return (corpus, rejected);
            }
            let bad: HashSet<Txid> = failures.iter().map(|(t, _)| *t).collect();
            rejected.extend(failures);
            let mut seen = HashSet::new();
            let kept: Vec<Transaction> = std::mem::take(&mut corpus.txs)
                .into_iter()
                .filter(|t| !bad.contains(&t.txid) && seen.insert(t.txid))
                .collect();
            corpus = Corpus::index(kept);
        }
    }

    fn failures(&self) -> Vec<(Txid, Vec<Violation>)> {
        let results: Vec<ValidationResult> = self
            .txs
            .par_iter()
            .map(|tx| validate_transaction(tx, self))
            .collect();
        let mut failures = Vec::new();
        let mut reported_dup = HashSet::new();
        for (tx, result) in self.txs.iter().zip(results) {
            if !result.is_ok() {
                if result.violations.contains(&Violation::DuplicateTxid)
                    && !reported_dup.insert(tx.txid)
                {
                    continue;
                }
                failures.push((tx.txid, result.violations));
            }
        }
        failures
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.txs
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn get(&self, txid: &Txid) -> Option<&Transaction> {
        self.by_txid.get(txid).map(|&i| &self.txs[i])
    }

    pub fn output(&self, outpoint: &OutPoint) -> Option<&TxOutput> {
        self.get(&outpoint.txid)?
            .outputs
            .get(outpoint.index as usize)
    }

    pub fn spender_of(&self, outpoint: &OutPoint) -> Option<&Txid> {
        self.spent_by.get(outpoint)
    }

    pub fn into_transactions(self) -> Vec<Transaction> {
        self.txs
    }

    /// Transactions that take part in clustering, graph and market analysis.
    pub fn regular(&self) -> impl Iterator<Item = &Transaction> {
        self.txs.iter().filter(|t| t.tx_type != TxType::Irregular)
    }

    /// Colored outputs not spent by any transaction in the corpus.
    pub fn unspent_colored(&self) -> impl Iterator<Item = (OutPoint, &TxOutput)> {
        self.txs.iter().flat_map(move |tx| {
            tx.outputs.iter().filter_map(move |o| {
                let op = tx.outpoint(o.index);
                (!o.bsq.is_zero() && !self.spent_by.contains_key(&op)).then_some((op, o))
            })
        })
    }
}

/// Checks `tx` against the model invariants, resolving inputs in `corpus`.
///
/// An input whose `prev_txid` is in the corpus must resolve to an existing
/// output carrying exactly the same BSQ; an input whose `prev_txid` is not in
/// the corpus must be uncolored.
pub fn validate_transaction(tx: &Transaction, corpus: &Corpus) -> ValidationResult {
    let mut violations = Vec::new();

    if corpus.duplicates.contains(&tx.txid) {
        violations.push(Violation::DuplicateTxid);
    }
    for (position, out) in tx.outputs.iter().enumerate() {
        if out.index as usize != position {
            violations.push(Violation::OutputIndexGap {
                position,
                found: out.index,
            });
        }
        if out.issuance {
            if !tx.tx_type.may_issue() {
                violations.push(Violation::IssuanceOnWrongType { index: out.index });
            }
            if out.bsq.is_zero() {
                violations.push(Violation::IssuanceWithoutBsq { index: out.index });
            }
        } else if tx.tx_type == TxType::Genesis && !out.bsq.is_zero() {
            violations.push(Violation::UnissuedGenesisOutput { index: out.index });
        }
    }
    if tx.tx_type == TxType::Genesis && tx.inputs.iter().any(TxInput::is_colored) {
        violations.push(Violation::GenesisWithColoredInputs);
    }

    for (i, input) in tx.inputs.iter().enumerate() {
        let outpoint = input.outpoint();
        match corpus.get(&input.prev_txid) {
            None => {
                if input.is_colored() {
                    violations.push(Violation::DanglingColoredInput { input: i });
                }
            }
            Some(prev) => match prev.outputs.get(input.prev_index as usize) {
                None => {
                    if input.is_colored() {
                        violations.push(Violation::DanglingColoredInput { input: i });
                    } else {
                        violations.push(Violation::DanglingInCorpusInput { input: i });
                    }
                }
                Some(spent) => {
                    if spent.bsq != input.bsq {
                        violations.push(Violation::ColoredInputMismatch {
                            input: i,
                            expected: spent.bsq.0,
                            found: input.bsq.0,
                        });
                    }
                    if let Some(spender) = corpus.spender_of(&outpoint) {
                        if *spender != tx.txid {
                            violations.push(Violation::DoubleSpend {
                                input: i,
                                spent_by: spender.to_string(),
                            });
                        }
                    }
                }
            },
        }
    }

    if tx.tx_type != TxType::Genesis {
        let (inputs, outputs) = (tx.input_bsq(), tx.non_issuance_output_bsq());
        if inputs < outputs {
            violations.push(Violation::NegativeBurn {
                inputs: inputs.to_string(),
                outputs: outputs.to_string(),
            });
        }
    }
    if tx.tx_type == TxType::Transfer {
        if tx.inputs.is_empty() {
            violations.push(Violation::TransferWithoutInputs);
        }
        if tx.outputs.first().is_none_or(|o| o.bsq.is_zero()) {
            violations.push(Violation::TransferWithoutRecipientBsq);
        }
    }

    ValidationResult { violations }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn txid(n: u8) -> Txid {
        Txid([n; 32])
    }

    pub fn addr(s: &str) -> Address {
        Address::new(s).unwrap()
    }

    pub fn input(prev: Txid, index: u32, address: &str, bsq: u64) -> TxInput {
        TxInput {
            prev_txid: prev,
            prev_index: index,
            address: addr(address),
            sat: SatAmount(1000),
            bsq: BsqAmount(bsq),
        }
    }

    pub fn output(index: u32, address: &str, bsq: u64, issuance: bool) -> TxOutput {
        TxOutput {
            index,
            address: addr(address),
            sat: SatAmount(546),
            bsq: BsqAmount(bsq),
            issuance,
        }
    }

    pub fn tx(
        id: u8,
        height: u64,
        tx_type: TxType,
        inputs: Vec<TxInput>,
        outputs: Vec<TxOutput>,
    ) -> Transaction {
        Transaction {
            txid: txid(id),
            height,
            tx_type,
            inputs,
            outputs,
        }
    }

    /// An external (out-of-corpus) funding input.
    pub fn funding(address: &str) -> TxInput {
        input(Txid([0xee; 32]), 0, address, 0)
    }

    pub fn genesis(id: u8, outputs: &[(&str, u64)]) -> Transaction {
        tx(
            id,
            0,
            TxType::Genesis,
            vec![funding("gen-funder")],
            outputs
                .iter()
                .enumerate()
                .map(|(i, (a, v))| output(i as u32, a, *v, true))
                .collect(),
        )
    }
}
