use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{transmit, transmit_backward, ChannelKind, FadingOptions};
use crate::error::{Error, Result};
use crate::nn::{build_network, Network, Role};
use crate::numerics::{streams, AdamConfig, AdamState, RngStream, Tensor};
use crate::train::loss::{
    joint_loss, joint_loss_partials, loss_bob, loss_eve, mean_distance_grad, normalized_eve_loss,
};
use crate::train::{Batch, DataSource, EveBatch, TrainingConfig};

/// Losses recorded after one epoch. `loss_bob`, `loss_eve` and `joint` are
/// measured in the cooperative phase, before its update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub epoch: usize,
    pub loss_bob: f64,
    pub loss_eve: f64,
    pub loss_eve_norm: f64,
    pub joint: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub reports: Vec<LossReport>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn last(&self) -> Option<&LossReport> {
        self.reports.last()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.reports {
            w.serialize(r)?;
        }
        if self.reports.is_empty() {
            w.write_record(["epoch", "loss_bob", "loss_eve", "loss_eve_norm", "joint"])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let reports = r.deserialize().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self { reports })
    }
}

/// The three trained networks.
#[derive(Debug, Clone)]
pub struct Parties {
    pub alice: Network,
    pub bob: Network,
    pub eve: Network,
}

impl Parties {
    /// Fresh Xavier-initialized networks from `init_seed`, built in the order
    /// Alice, Bob, Eve.
    pub fn initialize(config: &TrainingConfig) -> Result<Self> {
        let mut rng = RngStream::with_stream(config.init_seed, streams::INIT);
        let alice = build_network(Role::Alice, config.n, config.alice_activation(), &mut rng)?;
        let bob = build_network(Role::Bob, config.n, crate::nn::ActivationKind::Sigmoid, &mut rng)?;
        let eve = build_network(Role::Eve, config.n, crate::nn::ActivationKind::Sigmoid, &mut rng)?;
        Ok(Self { alice, bob, eve })
    }

    pub fn network(&self, role: Role) -> &Network {
        match role {
            Role::Alice => &self.alice,
            Role::Bob => &self.bob,
            Role::Eve => &self.eve,
        }
    }
}

/// Intermediate values of one cooperative forward pass.
#[derive(Debug, Clone)]
pub struct CooperativeStep {
    pub batch: Batch,
    pub loss_bob: f64,
    pub loss_eve: f64,
    pub joint: f64,
}

/// Parameter equality down to the bit pattern, so NaN weights compare equal to themselves.
pub fn bit_identical(a: &[Tensor], b: &[Tensor]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.shape() == y.shape()
                && x.data().iter().zip(y.data()).all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

/// Alternating cooperative/adversarial training state.
pub struct Trainer {
    config: TrainingConfig,
    parties: Parties,
    adam_alice_bob: AdamState,
    adam_eve: AdamState,
    data: DataSource,
    rng_channel: RngStream,
    channel: ChannelKind,
    fading: FadingOptions,
    epoch: usize,
}

impl Trainer {
    pub fn new(config: &TrainingConfig) -> Result<Self> {
        config.validate()?;
        let parties = Parties::initialize(config)?;
        Self::with_parties(config, parties)
    }

    /// Trains supplied networks instead of fresh ones.
    pub fn with_parties(config: &TrainingConfig, parties: Parties) -> Result<Self> {
        config.validate()?;
        for role in Role::ALL {
            let net = parties.network(role);
            if net.n() != config.n || net.role() != role {
                return Err(Error::InvalidArgument(format!(
                    "{role} network has N={} (role {}), config wants N={}",
                    net.n(),
                    net.role(),
                    config.n
                )));
            }
        }
        let adam = AdamConfig::with_learning_rate(config.learning_rate);
        let ab_shapes: Vec<Vec<usize>> = parties
            .alice
            .param_shapes()
            .into_iter()
            .chain(parties.bob.param_shapes())
            .collect();
        let eve_shapes = parties.eve.param_shapes();
        Ok(Self {
            adam_alice_bob: AdamState::new(adam, ab_shapes.iter().map(Vec::as_slice)),
            adam_eve: AdamState::new(adam, eve_shapes.iter().map(Vec::as_slice)),
            data: DataSource::training(config)?,
            rng_channel: RngStream::with_stream(config.channel_seed, streams::CHANNEL),
            channel: config.train_channel().validate()?,
            fading: config.fading(),
            parties,
            config: config.clone(),
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainingConfig {
        &self.config
    }

    pub fn parties(&self) -> &Parties {
        &self.parties
    }

    pub fn into_parties(self) -> Parties {
        self.parties
    }

    /// Completed epochs.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn check_finite(&self, values: &[f64], phase: &'static str) -> Result<()> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteLoss {
                epoch: self.epoch + 1,
                phase,
            })
        }
    }

    /// Phase 1: Alice and Bob descend the joint loss with Eve frozen. Eve is
    /// still run forward and backward so her gradient reaches Alice.
    pub fn phase_cooperative(&mut self, batch: Batch) -> Result<CooperativeStep> {
        let eve_before = cfg!(debug_assertions).then(|| self.parties.eve.snapshot());
        let n = self.config.n;
        let Parties { alice, bob, eve } = &mut self.parties;

        let cipher = alice.forward(&batch.alice_input()?)?;
        let link = transmit(&cipher, self.channel, &self.fading, &mut self.rng_channel)?;
        let p_bob = bob.forward(&Tensor::concat_cols(&link.received, &batch.key)?)?;
        let p_eve = eve.forward(&link.received)?;

        let lb = loss_bob(&batch.plaintext, &p_bob)?;
        let le = loss_eve(&batch.plaintext, &p_eve)?;
        let joint = joint_loss(lb, le, self.config.loss_variant, n);
        if ![lb, le, joint].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteLoss {
                epoch: self.epoch + 1,
                phase: "cooperative",
            });
        }

        let (d_lb, d_le) = joint_loss_partials(le, self.config.loss_variant, n);
        let g_bob = mean_distance_grad(&batch.plaintext, &p_bob)?.scale(d_lb);
        let g_eve = mean_distance_grad(&batch.plaintext, &p_eve)?.scale(d_le);
        let mut d_received = bob.backward(&g_bob)?.slice_cols(0, n)?;
        d_received.add_assign(&eve.backward(&g_eve)?)?;
        let d_cipher = transmit_backward(&d_received, &link.realization)?;
        alice.backward(&d_cipher)?;

        self.adam_alice_bob.step(
            alice
                .params_and_grads_mut()
                .into_iter()
                .chain(bob.params_and_grads_mut()),
        )?;

        if let Some(before) = eve_before {
            debug_assert!(bit_identical(&self.parties.eve.snapshot(), &before), "Eve changed in phase 1");
        }
        Ok(CooperativeStep {
            batch,
            loss_bob: lb,
            loss_eve: le,
            joint,
        })
    }

    /// Phase 2: Eve descends her own loss with Alice (and Bob) frozen.
    /// Returns Eve's loss before the update.
    pub fn phase_adversary(&mut self, batch: &Batch) -> Result<f64> {
        let frozen_before = cfg!(debug_assertions)
            .then(|| (self.parties.alice.snapshot(), self.parties.bob.snapshot()));
        let Parties { alice, eve, .. } = &mut self.parties;

        let cipher = alice.infer(&batch.alice_input()?)?;
        let link = transmit(&cipher, self.channel, &self.fading, &mut self.rng_channel)?;
        let p_eve = eve.forward(&link.received)?;
        let le = loss_eve(&batch.plaintext, &p_eve)?;
        self.check_finite(&[le], "adversary")?;

        let Parties { eve, .. } = &mut self.parties;
        eve.backward(&mean_distance_grad(&batch.plaintext, &p_eve)?)?;
        self.adam_eve.step(eve.params_and_grads_mut())?;

        if let Some((a, b)) = frozen_before {
            debug_assert!(
                bit_identical(&self.parties.alice.snapshot(), &a)
                    && bit_identical(&self.parties.bob.snapshot(), &b),
                "Alice or Bob changed in phase 2"
            );
        }
        Ok(le)
    }

    /// One cooperative step followed by one adversary step.
    pub fn train_epoch(&mut self) -> Result<LossReport> {
        let size = self.config.batch_size;
        let batch = self.data.next_batch(size)?;
        let step = self.phase_cooperative(batch)?;
        let eve_batch = match self.config.eve_batch {
            EveBatch::Fresh => self.data.next_batch(size)?,
            EveBatch::Reuse => step.batch,
        };
        self.phase_adversary(&eve_batch)?;
        self.epoch += 1;
        Ok(LossReport {
            epoch: self.epoch,
            loss_bob: step.loss_bob,
            loss_eve: step.loss_eve,
            loss_eve_norm: normalized_eve_loss(step.loss_eve, self.config.n),
            joint: step.joint,
        })
    }

    /// Runs `epochs` epochs, calling `progress` after each.
    pub fn run(
        &mut self,
        epochs: usize,
        mut progress: impl FnMut(&LossReport),
    ) -> Result<LossHistory> {
        let mut history = LossHistory::default();
        for _ in 0..epochs {
            let report = self.train_epoch()?;
            progress(&report);
            history.reports.push(report);
        }
        Ok(history)
    }
}

/// Trains for `config.resolved_epochs()` epochs from a fresh initialization.
pub fn train(config: &TrainingConfig) -> Result<(Parties, LossHistory)> {
    let mut trainer = Trainer::new(config)?;
    let history = trainer.run(config.resolved_epochs(), |_| {})?;
    Ok((trainer.into_parties(), history))
}
