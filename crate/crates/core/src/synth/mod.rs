//! Seeded synthetic corpora with ground truth.
//!
//! A generated corpus comes with the true owner of every address, a
//! per-transaction ledger, the tag database and pre-launch spreadsheet a
//! real analysis would start from, and a log of every injected event
//! (aliases, wallet migrations, CoinJoin funding, disguised and dummy
//! transfers). [`oracle_cluster`] and [`compare_partitions`] score
//! clusterings against it.

mod compare;
mod oracle;
mod rng;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::{BsqAmount, SatAmount};
use crate::ingest::{TagRecord, TagSource};
use crate::model::{
    burn_amount, minted_amount, Address, Corpus, OutPoint, Transaction, TxInput, TxOutput, TxType,
    Txid,
};

pub use compare::{
    compare_partitions, score_against_truth, CompareError, PartitionDiff, TruthScore,
};
pub use oracle::oracle_cluster;
pub use rng::SynthRng;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),
}

/// Countermeasure and mixing behaviours to inject.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adversarial {
    /// Pay other participants with trade-fee-shaped transactions.
    pub disguised_transfers: bool,
    /// Follow every self-transfer with a transfer of its change to a fresh
    /// address of the same participant.
    pub dummy_transfers: bool,
    /// Fund the genesis transaction from several participants at once.
    pub coinjoin: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub participants: usize,
    /// Transactions after genesis, excluding injected dummy and migration
    /// transfers.
    pub tx_count: usize,
    /// Relative weights of the post-genesis types. A `GENESIS` weight is
    /// ignored: there is always exactly one genesis transaction.
    pub type_mix: BTreeMap<TxType, u64>,
    pub seed: u64,
    pub adversarial: Adversarial,
    pub migrations: usize,
    pub alias_conflicts: usize,
}

/// Type counts of the analysed BSQ history, used as the default mix.
pub fn observed_mix() -> BTreeMap<TxType, u64> {
    BTreeMap::from([
        (TxType::TradeFee, 27285),
        (TxType::Transfer, 2095),
        (TxType::CompensationRequest, 269),
        (TxType::BlindVote, 239),
        (TxType::VoteReveal, 236),
        (TxType::Proposal, 87),
        (TxType::Lockup, 39),
        (TxType::AssetListingFee, 22),
        (TxType::ProofOfBurn, 22),
        (TxType::Unlock, 11),
        (TxType::ReimbursementRequest, 5),
        (TxType::Genesis, 1),
    ])
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            participants: 50,
            tx_count: 1000,
            type_mix: observed_mix(),
            seed: 0,
            adversarial: Adversarial::default(),
            migrations: 0,
            alias_conflicts: 0,
        }
    }
}

/// Splits `total` over the weighted types by largest remainder; ties go to
/// the earlier type. The result sums to `total` exactly.
pub fn apportion(total: usize, mix: &BTreeMap<TxType, u64>) -> BTreeMap<TxType, usize> {
    let weights: Vec<(TxType, u128)> = mix
        .iter()
        .filter(|(t, w)| **t != TxType::Genesis && **w > 0)
        .map(|(t, w)| (*t, *w as u128))
        .collect();
    let sum: u128 = weights.iter().map(|(_, w)| w).sum();
    if sum == 0 {
        return BTreeMap::new();
    }
    let n = total as u128;
    let mut counts: Vec<(TxType, usize, u128)> = weights
        .iter()
        .map(|&(t, w)| (t, (n * w / sum) as usize, n * w % sum))
        .collect();
    let assigned: usize = counts.iter().map(|c| c.1).sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].2.cmp(&counts[a].2).then(a.cmp(&b)));
    for &i in order.iter().take(total - assigned) {
        counts[i].1 += 1;
    }
    counts.into_iter().map(|(t, c, _)| (t, c)).collect()
}

/// What a ledger entry records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerKind {
    Genesis,
    SelfTransfer,
    Transfer,
    DisguisedTransfer,
    DummyTransfer,
    Migration,
    Irregular,
}

/// The truth about one generated transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub txid: Txid,
    pub tx_type: TxType,
    pub kind: LedgerKind,
    /// Participant who built the transaction.
    pub sender: String,
    /// Participant paid, for transfers of any kind.
    pub recipient: Option<String>,
    /// BSQ moved to the recipient.
    pub amount: BsqAmount,
    pub inputs_bsq: BsqAmount,
    pub outputs_bsq: BsqAmount,
    pub minted: BsqAmount,
    pub burnt: BsqAmount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InjectedEvent {
    /// One participant tagged under two unrelated names.
    AliasConflict {
        participant: String,
        address: Address,
        tags: Vec<String>,
    },
    /// A participant moved all BSQ to a fresh wallet; both wallets carry
    /// the participant's tag.
    Migration {
        participant: String,
        txid: Txid,
        old_address: Address,
        new_address: Address,
    },
    /// Genesis funded by several participants' inputs.
    CoinJoin {
        txid: Txid,
        participants: Vec<String>,
    },
    DisguisedTransfer {
        txid: Txid,
        sender: String,
        recipient: String,
    },
    DummyTransfer {
        txid: Txid,
        participant: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub participants: BTreeMap<String, BTreeSet<Address>>,
    pub ledger: Vec<LedgerEntry>,
    pub injected_events: Vec<InjectedEvent>,
}

impl GroundTruth {
    pub fn owners(&self) -> HashMap<Address, String> {
        self.participants
            .iter()
            .flat_map(|(p, addrs)| addrs.iter().map(move |a| (a.clone(), p.clone())))
            .collect()
    }

    pub fn minted(&self) -> BsqAmount {
        self.ledger.iter().map(|e| e.minted).sum()
    }

    pub fn burnt(&self) -> BsqAmount {
        self.ledger.iter().map(|e| e.burnt).sum()
    }

    pub fn count_events(&self, pred: impl Fn(&InjectedEvent) -> bool) -> usize {
        self.injected_events.iter().filter(|e| pred(e)).count()
    }
}

/// Everything [`generate`] produces.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub truth: GroundTruth,
    pub tags: Vec<TagRecord>,
    /// `(tag, pre-launch address)` in genesis output order.
    pub genesis_spreadsheet: Vec<(String, Address)>,
}

#[derive(Debug, Clone)]
struct Utxo {
    outpoint: OutPoint,
    address: Address,
    bsq: BsqAmount,
}

#[derive(Debug)]
struct Participant {
    id: String,
    next_address: u32,
    wallet: Vec<Utxo>,
    addresses: BTreeSet<Address>,
    /// First address that received BSQ; carries the participant's tag.
    tag_address: Option<Address>,
    generator: bool,
    contributor: bool,
    migrated: bool,
}

struct Generator {
    rng: SynthRng,
    people: Vec<Participant>,
    /// Indices of participants holding BSQ, kept sorted.
    funded: Vec<usize>,
    txs: Vec<Transaction>,
    truth: GroundTruth,
    height: u64,
    adversarial: Adversarial,
}

/// Output under construction: owner, amount, issuance flag.
type Pay = (usize, BsqAmount, bool);

fn pseudonym(index: usize) -> String {
    const SYLLABLES: [&str; 16] = [
        "ka", "lo", "mi", "ne", "ru", "sa", "to", "vi", "ze", "po", "qu", "da", "fe", "gi", "ho",
        "ju",
    ];
    let mut name = String::new();
    let mut n = index;
    loop {
        name.push_str(SYLLABLES[n % 16]);
        n /= 16;
        if n == 0 {
            break;
        }
    }
    format!("{name}_{index}")
}

fn real_name(index: usize) -> String {
    format!("Contributor Number {index}")
}

impl Generator {
    fn fresh_address(&mut self, who: usize) -> Address {
        let p = &mut self.people[who];
        let address = Address::new(&format!("{}-a{:04}", p.id, p.next_address)).expect("non-empty");
        p.next_address += 1;
        p.addresses.insert(address.clone());
        address
    }

    fn funding_input(&mut self, who: usize) -> TxInput {
        let prev_txid = self.rng.txid();
        let prev_index = self.rng.below(4) as u32;
        let sat = SatAmount(self.rng.between(20_000, 2_000_000));
        TxInput {
            prev_txid,
            prev_index,
            address: self.fresh_address(who),
            sat,
            bsq: BsqAmount::ZERO,
        }
    }

    fn mark_funded(&mut self, who: usize) {
        let funded = !self.people[who].wallet.is_empty();
        match (self.funded.binary_search(&who), funded) {
            (Err(pos), true) => self.funded.insert(pos, who),
            (Ok(pos), false) => {
                self.funded.remove(pos);
            }
            _ => {}
        }
    }

    fn take_utxos(&mut self, who: usize, count: usize) -> Vec<Utxo> {
        let mut taken = Vec::with_capacity(count);
        for _ in 0..count.min(self.people[who].wallet.len()) {
            let i = self.rng.index(self.people[who].wallet.len());
            taken.push(self.people[who].wallet.swap_remove(i));
        }
        self.mark_funded(who);
        taken
    }

    fn take_all(&mut self, who: usize) -> Vec<Utxo> {
        let taken = std::mem::take(&mut self.people[who].wallet);
        self.mark_funded(who);
        taken
    }

    /// A funded participant, drawn from those satisfying `prefer` when any
    /// do.
    fn pick_funded(
        &mut self,
        prefer: Option<&dyn Fn(&Participant) -> bool>,
    ) -> Result<usize, SynthError> {
        if self.funded.is_empty() {
            return Err(SynthError::InfeasibleConfig(
                "no participant holds BSQ".into(),
            ));
        }
        if let Some(prefer) = prefer {
            let preferred: Vec<usize> = self
                .funded
                .iter()
                .copied()
                .filter(|&i| prefer(&self.people[i]))
                .collect();
            if !preferred.is_empty() {
                return Ok(preferred[self.rng.index(preferred.len())]);
            }
        }
        Ok(self.funded[self.rng.index(self.funded.len())])
    }

    /// Builds and records a transaction. Colored outputs come first in
    /// `pays` order; an uncolored change output to `change_to` follows.
    #[allow(clippy::too_many_arguments)]
    fn emit(
        &mut self,
        tx_type: TxType,
        kind: LedgerKind,
        sender: usize,
        spent: Vec<Utxo>,
        extra_inputs: Vec<TxInput>,
        pays: Vec<Pay>,
        change_to: Option<usize>,
        recipient: Option<(usize, BsqAmount)>,
    ) -> Txid {
        let txid = self.rng.txid();
        let mut inputs: Vec<TxInput> = spent
            .into_iter()
            .map(|u| TxInput {
                prev_txid: u.outpoint.txid,
                prev_index: u.outpoint.index,
                address: u.address,
                sat: SatAmount(546),
                bsq: u.bsq,
            })
            .collect();
        inputs.extend(extra_inputs);
        let mut outputs = Vec::with_capacity(pays.len() + 1);
        for (owner, bsq, issuance) in pays {
            let index = outputs.len() as u32;
            let address = self.fresh_address(owner);
            let p = &mut self.people[owner];
            if p.tag_address.is_none() {
                p.tag_address = Some(address.clone());
            }
            p.wallet.push(Utxo {
                outpoint: OutPoint { txid, index },
                address: address.clone(),
                bsq,
            });
            self.mark_funded(owner);
            outputs.push(TxOutput {
                index,
                address,
                sat: SatAmount(546),
                bsq,
                issuance,
            });
        }
        if let Some(owner) = change_to {
            let sat = SatAmount(self.rng.between(1_000, 1_000_000));
            let address = self.fresh_address(owner);
            outputs.push(TxOutput {
                index: outputs.len() as u32,
                address,
                sat,
                bsq: BsqAmount::ZERO,
                issuance: false,
            });
        }
        let tx = Transaction {
            txid,
            height: self.height,
            tx_type,
            inputs,
            outputs,
        };
        let entry = LedgerEntry {
            txid,
            tx_type,
            kind,
            sender: self.people[sender].id.clone(),
            recipient: recipient.map(|(r, _)| self.people[r].id.clone()),
            amount: recipient.map(|(_, a)| a).unwrap_or_default(),
            inputs_bsq: tx.inputs.iter().map(|i| i.bsq).sum(),
            outputs_bsq: tx.outputs.iter().map(|o| o.bsq).sum(),
            minted: minted_amount(&tx),
            burnt: burn_amount(&tx).expect("generator conserves BSQ"),
        };
        self.truth.ledger.push(entry);
        self.txs.push(tx);
        txid
    }

    fn genesis(&mut self, generators: &[usize], funders: &[usize]) -> Vec<(String, Address)> {
        let inputs: Vec<TxInput> = funders.iter().map(|&f| self.funding_input(f)).collect();
        let pays: Vec<Pay> = generators
            .iter()
            .map(|&g| (g, BsqAmount(self.rng.between(100_000, 5_000_000)), true))
            .collect();
        let txid = self.emit(
            TxType::Genesis,
            LedgerKind::Genesis,
            funders[0],
            Vec::new(),
            inputs,
            pays,
            None,
            None,
        );
        if funders.len() > 1 {
            let participants = funders.iter().map(|&f| self.people[f].id.clone()).collect();
            self.truth
                .injected_events
                .push(InjectedEvent::CoinJoin { txid, participants });
        }
        generators
            .iter()
            .map(|&g| {
                (
                    pseudonym(g),
                    Address::new(&format!("PRE-{}", self.people[g].id)).expect("non-empty"),
                )
            })
            .collect()
    }

    fn fee_for(&mut self, tx_type: TxType, input: u64) -> u64 {
        let fee = match tx_type {
            TxType::TradeFee | TxType::Irregular => {
                1 + self.rng.below((input / 100).clamp(1, 2_000))
            }
            TxType::BlindVote | TxType::VoteReveal => self.rng.between(1, 50),
            TxType::Proposal | TxType::CompensationRequest | TxType::ReimbursementRequest => {
                self.rng.between(100, 200)
            }
            TxType::AssetListingFee => self.rng.between(1_000, 50_000),
            TxType::ProofOfBurn => 1 + self.rng.below((input / 4).max(1)),
            _ => 0,
        };
        fee.min(input.saturating_sub(1))
    }

    /// A self-transfer of `tx_type` by a funded participant; returns the
    /// actor and the outpoint of its colored change.
    fn self_transfer(&mut self, tx_type: TxType) -> Result<(usize, OutPoint), SynthError> {
        let wants_contributor = matches!(
            tx_type,
            TxType::Proposal | TxType::CompensationRequest | TxType::ReimbursementRequest
        );
        let contributor = |p: &Participant| p.contributor;
        let actor = self.pick_funded(if wants_contributor {
            Some(&contributor)
        } else {
            None
        })?;
        let count = if self.rng.chance(1, 4) { 2 } else { 1 };
        let spent = self.take_utxos(actor, count);
        let input: u64 = spent.iter().map(|u| u.bsq.0).sum();
        let fee = self.fee_for(tx_type, input);
        let kept = input - fee;
        let mut pays: Vec<Pay> = Vec::new();
        if tx_type == TxType::Lockup && kept >= 2 {
            let locked = self.rng.between(1, kept - 1);
            pays.push((actor, BsqAmount(locked), false));
            pays.push((actor, BsqAmount(kept - locked), false));
        } else {
            pays.push((actor, BsqAmount(kept), false));
        }
        let issued = match tx_type {
            TxType::CompensationRequest if self.rng.chance(3, 4) => {
                self.rng.between(50_000, 2_000_000)
            }
            TxType::ReimbursementRequest if self.rng.chance(3, 4) => {
                self.rng.between(10_000, 500_000)
            }
            _ => 0,
        };
        if issued > 0 {
            pays.push((actor, BsqAmount(issued), true));
        }
        let funding = vec![self.funding_input(actor)];
        let kind = if tx_type == TxType::Irregular {
            LedgerKind::Irregular
        } else {
            LedgerKind::SelfTransfer
        };
        let txid = self.emit(
            tx_type,
            kind,
            actor,
            spent,
            funding,
            pays,
            Some(actor),
            None,
        );
        Ok((actor, OutPoint { txid, index: 0 }))
    }

    fn pick_recipient(&mut self, sender: usize) -> usize {
        let unseen: Vec<usize> = (0..self.people.len())
            .filter(|&i| i != sender && self.people[i].addresses.is_empty())
            .collect();
        if !unseen.is_empty() && self.rng.chance(1, 2) {
            return unseen[self.rng.index(unseen.len())];
        }
        let r = self.rng.index(self.people.len() - 1);
        if r >= sender {
            r + 1
        } else {
            r
        }
    }

    fn transfer(&mut self, disguised: bool) -> Result<(), SynthError> {
        let sender = self.pick_funded(None)?;
        let recipient = self.pick_recipient(sender);
        let count = if self.rng.chance(1, 4) { 2 } else { 1 };
        let spent = self.take_utxos(sender, count);
        let total: u64 = spent.iter().map(|u| u.bsq.0).sum();
        let funding = vec![self.funding_input(sender)];
        if disguised {
            let fee = self.fee_for(TxType::TradeFee, total);
            let amount = BsqAmount(total - fee);
            let pays = vec![(recipient, amount, false)];
            let txid = self.emit(
                TxType::TradeFee,
                LedgerKind::DisguisedTransfer,
                sender,
                spent,
                funding,
                pays,
                Some(sender),
                Some((recipient, amount)),
            );
            let (s, r) = (
                self.people[sender].id.clone(),
                self.people[recipient].id.clone(),
            );
            self.truth
                .injected_events
                .push(InjectedEvent::DisguisedTransfer {
                    txid,
                    sender: s,
                    recipient: r,
                });
        } else {
            let amount = self.rng.between(1, total);
            let mut pays = vec![(recipient, BsqAmount(amount), false)];
            if amount < total {
                pays.push((sender, BsqAmount(total - amount), false));
            }
            self.emit(
                TxType::Transfer,
                LedgerKind::Transfer,
                sender,
                spent,
                funding,
                pays,
                Some(sender),
                Some((recipient, BsqAmount(amount))),
            );
        }
        Ok(())
    }

    /// Moves the given colored outputs of `who` to one fresh address of
    /// `who` with a transfer.
    fn self_send(&mut self, who: usize, spent: Vec<Utxo>, kind: LedgerKind) -> (Txid, Address) {
        let total = BsqAmount(spent.iter().map(|u| u.bsq.0).sum());
        let funding = vec![self.funding_input(who)];
        let txid = self.emit(
            TxType::Transfer,
            kind,
            who,
            spent,
            funding,
            vec![(who, total, false)],
            Some(who),
            Some((who, total)),
        );
        let address = self.txs.last().expect("just emitted").outputs[0]
            .address
            .clone();
        (txid, address)
    }

    fn dummy_after(&mut self, who: usize, change: OutPoint) {
        let wallet = &mut self.people[who].wallet;
        let Some(pos) = wallet.iter().position(|u| u.outpoint == change) else {
            return;
        };
        let utxo = wallet.swap_remove(pos);
        self.mark_funded(who);
        let (txid, _) = self.self_send(who, vec![utxo], LedgerKind::DummyTransfer);
        let participant = self.people[who].id.clone();
        self.truth
            .injected_events
            .push(InjectedEvent::DummyTransfer { txid, participant });
    }

    fn migrate(&mut self) -> Result<(), SynthError> {
        let who = self
            .pick_funded(Some(&|p: &Participant| {
                !p.migrated && p.tag_address.is_some()
            }))
            .ok()
            .filter(|&i| !self.people[i].migrated && self.people[i].tag_address.is_some())
            .ok_or_else(|| {
                SynthError::InfeasibleConfig("not enough funded participants to migrate".into())
            })?;
        let spent = self.take_all(who);
        let (txid, new_address) = self.self_send(who, spent, LedgerKind::Migration);
        let p = &mut self.people[who];
        p.migrated = true;
        let old_address = p.tag_address.clone().expect("checked");
        let participant = p.id.clone();
        self.truth.injected_events.push(InjectedEvent::Migration {
            participant,
            txid,
            old_address,
            new_address,
        });
        Ok(())
    }
}

/// Generates a corpus, its ground truth, tag database and genesis
/// spreadsheet. The same config always yields the same output.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    let infeasible = |why: &str| Err(SynthError::InfeasibleConfig(why.to_string()));
    let n = config.participants;
    if n == 0 {
        return infeasible("at least one participant is required");
    }
    let schedule_counts = apportion(config.tx_count, &config.type_mix);
    if config.tx_count > 0 && schedule_counts.is_empty() {
        return infeasible("type mix has no positive weight");
    }
    if n == 1 && schedule_counts.get(&TxType::Transfer).copied().unwrap_or(0) > 0 {
        return infeasible("transfers need at least two participants");
    }
    if config.adversarial.coinjoin && n < 2 {
        return infeasible("a CoinJoin needs at least two participants");
    }
    if config.migrations + config.alias_conflicts > n {
        return infeasible("more migrations and alias conflicts than participants");
    }

    let width = (n.saturating_sub(1)).to_string().len().max(2);
    let generator_count = (n * 178).div_ceil(1027).max(1);
    let contributor_count = (n * 74).div_ceil(1027).max(1);
    let mut rng = SynthRng::new(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let people = (0..n)
        .map(|i| Participant {
            id: format!("P{i:0width$}"),
            next_address: 0,
            wallet: Vec::new(),
            addresses: BTreeSet::new(),
            tag_address: None,
            generator: i < generator_count,
            contributor: order[..contributor_count].contains(&i),
            migrated: false,
        })
        .collect();
    let mut gen = Generator {
        rng,
        people,
        funded: Vec::new(),
        txs: Vec::with_capacity(config.tx_count + 1),
        truth: GroundTruth {
            seed: config.seed,
            ..GroundTruth::default()
        },
        height: 0,
        adversarial: config.adversarial,
    };

    let mut generators: Vec<usize> = (0..generator_count).collect();
    gen.rng.shuffle(&mut generators);
    let funders: Vec<usize> = if gen.adversarial.coinjoin {
        (0..n.min(3)).collect()
    } else {
        vec![0]
    };
    let genesis_spreadsheet = gen.genesis(&generators, &funders);

    let mut schedule: Vec<TxType> = schedule_counts
        .iter()
        .flat_map(|(&t, &c)| std::iter::repeat_n(t, c))
        .collect();
    gen.rng.shuffle(&mut schedule);

    let mut seen_transfer = false;
    let mut migrations_done = 0;
    for (slot, tx_type) in schedule.into_iter().enumerate() {
        gen.height = 1 + slot as u64 / 4;
        if tx_type == TxType::Transfer {
            let disguised =
                gen.adversarial.disguised_transfers && (!seen_transfer || gen.rng.chance(1, 4));
            seen_transfer = true;
            gen.transfer(disguised)?;
        } else {
            let (actor, change) = gen.self_transfer(tx_type)?;
            if gen.adversarial.dummy_transfers && tx_type != TxType::Irregular {
                gen.dummy_after(actor, change);
            }
        }
        while migrations_done < config.migrations
            && (slot + 1) * (config.migrations + 1) >= (migrations_done + 1) * config.tx_count
        {
            gen.migrate()?;
            migrations_done += 1;
        }
    }
    while migrations_done < config.migrations {
        gen.migrate()?;
        migrations_done += 1;
    }

    let tags = build_tags(&mut gen, config.alias_conflicts)?;
    gen.truth.participants = gen
        .people
        .iter()
        .map(|p| (p.id.clone(), p.addresses.clone()))
        .collect();
    let corpus = Corpus::assemble(gen.txs)
        .map_err(|e| SynthError::InfeasibleConfig(format!("generator bug: {e}")))?;
    Ok(SynthOutput {
        corpus,
        truth: gen.truth,
        tags,
        genesis_spreadsheet,
    })
}

/// One record per participant that ever received BSQ, a second address
/// per migrated participant, and a second name per alias conflict.
fn build_tags(gen: &mut Generator, alias_conflicts: usize) -> Result<Vec<TagRecord>, SynthError> {
    let mut tags = Vec::new();
    for (i, p) in gen.people.iter().enumerate() {
        let Some(address) = &p.tag_address else {
            continue;
        };
        let source = if p.generator {
            TagSource::GenesisMapping
        } else if p.contributor {
            TagSource::GithubIssue
        } else {
            TagSource::Manual
        };
        tags.push(TagRecord {
            address: address.clone(),
            tag: pseudonym(i),
            source,
        });
    }
    for event in &gen.truth.injected_events {
        if let InjectedEvent::Migration {
            participant,
            new_address,
            ..
        } = event
        {
            let i = gen
                .people
                .iter()
                .position(|p| &p.id == participant)
                .expect("known participant");
            tags.push(TagRecord {
                address: new_address.clone(),
                tag: pseudonym(i),
                source: TagSource::Manual,
            });
        }
    }
    let mut eligible: Vec<usize> = (0..gen.people.len())
        .filter(|&i| gen.people[i].tag_address.is_some() && !gen.people[i].migrated)
        .collect();
    if eligible.len() < alias_conflicts {
        return Err(SynthError::InfeasibleConfig(
            "not enough tagged participants for alias conflicts".into(),
        ));
    }
    gen.rng.shuffle(&mut eligible);
    let mut chosen: Vec<usize> = eligible[..alias_conflicts].to_vec();
    chosen.sort_unstable();
    for i in chosen {
        let p = &gen.people[i];
        let address = p.tag_address.clone().expect("eligible");
        tags.push(TagRecord {
            address: address.clone(),
            tag: real_name(i),
            source: TagSource::GithubIssue,
        });
        gen.truth
            .injected_events
            .push(InjectedEvent::AliasConflict {
                participant: p.id.clone(),
                address,
                tags: vec![pseudonym(i), real_name(i)],
            });
    }
    Ok(tags)
}
