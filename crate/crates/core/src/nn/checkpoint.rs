//! Text checkpoint (`MPHNET-CHECKPOINT v1`).
//!
//! Every float is written in Rust's shortest round-trip decimal form, so a
//! save/load cycle restores parameters, optimizer moments and the shuffling
//! RNG bit for bit. Layout, one record per line:
//!
//! ```text
//! MPHNET-CHECKPOINT v1
//! variant <lattice|standard>
//! activation <relu|tanh>
//! alpha <f>
//! input <C> <H> <W>
//! classes <K>
//! conv_channels <a> <b> <c>
//! fc_hidden <n>
//! support_side <s>
//! epoch <n>
//! input_scale <C floats>
//! rng <seed hex> <stream> <word_pos>
//! adam <step> <lr> <beta1> <beta2> <epsilon>
//! tensors <N>
//! param <k> <dims...>      followed by a line of values, N times
//! adam_m <k> <dims...>     likewise
//! adam_v <k> <dims...>     likewise
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::network::{Network, NetworkConfig};
use super::tensor::Tensor;
use crate::error::{Error, Result};

const MAGIC: &str = "MPHNET-CHECKPOINT v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub adam: AdamState,
    /// Per-channel divisor applied after `log(1 + v)`.
    pub input_scale: Vec<f64>,
    pub rng: ChaCha8Rng,
    /// Completed training epochs.
    pub epoch: usize,
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let c = &self.network.config;
        let mut s = String::new();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "variant {}", c.variant).unwrap();
        writeln!(s, "activation {}", c.activation).unwrap();
        writeln!(s, "alpha {}", c.alpha).unwrap();
        writeln!(s, "input {} {} {}", c.in_channels, c.rows, c.cols).unwrap();
        writeln!(s, "classes {}", c.classes).unwrap();
        writeln!(s, "conv_channels {}", join(c.conv_channels)).unwrap();
        writeln!(s, "fc_hidden {}", c.fc_hidden).unwrap();
        writeln!(s, "support_side {}", c.support_side).unwrap();
        writeln!(s, "epoch {}", self.epoch).unwrap();
        writeln!(s, "input_scale {}", join(&self.input_scale)).unwrap();
        let seed: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        writeln!(s, "rng {seed} {} {}", self.rng.get_stream(), self.rng.get_word_pos()).unwrap();
        let a = &self.adam;
        writeln!(s, "adam {} {} {} {} {}", a.step, a.lr, a.beta1, a.beta2, a.epsilon).unwrap();
        let params = self.network.params();
        writeln!(s, "tensors {}", params.len()).unwrap();
        for (tag, tensors) in [
            ("param", params),
            ("adam_m", a.m.iter().collect()),
            ("adam_v", a.v.iter().collect()),
        ] {
            for (k, t) in tensors.iter().enumerate() {
                writeln!(s, "{tag} {k} {}", join(t.shape())).unwrap();
                writeln!(s, "{}", join(t.data())).unwrap();
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Reader {
            lines: text.lines().enumerate(),
            lineno: 0,
        };
        if r.next_line()? != MAGIC {
            return Err(Error::parse(1, "not an MPHNET-CHECKPOINT v1 file"));
        }
        let variant = r.field("variant")?.parse()?;
        let activation = r.field("activation")?.parse()?;
        let alpha = r.num_field::<f64>("alpha")?;
        let input: Vec<usize> = r.nums_field("input")?;
        if input.len() != 3 {
            return Err(r.err("input needs 3 dimensions"));
        }
        let classes = r.num_field("classes")?;
        let conv: Vec<usize> = r.nums_field("conv_channels")?;
        let conv_channels: [usize; 3] = conv.try_into().map_err(|_| r.err("conv_channels needs 3 values"))?;
        let fc_hidden = r.num_field("fc_hidden")?;
        let support_side = r.num_field("support_side")?;
        let epoch = r.num_field("epoch")?;
        let input_scale: Vec<f64> = r.nums_field("input_scale")?;

        let rng_line = r.field("rng")?;
        let toks: Vec<&str> = rng_line.split_whitespace().collect();
        if toks.len() != 3 || toks[0].len() != 64 {
            return Err(r.err("rng needs <64 hex digits> <stream> <word_pos>"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&toks[0][2 * i..2 * i + 2], 16).map_err(|_| r.err("bad rng seed"))?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(r.num(toks[1])?);
        rng.set_word_pos(r.num(toks[2])?);

        let adam_line: Vec<&str> = r.field("adam")?.split_whitespace().collect();
        if adam_line.len() != 5 {
            return Err(r.err("adam needs 5 values"));
        }
        let step = r.num(adam_line[0])?;
        let [lr, beta1, beta2, epsilon] = [1, 2, 3, 4].map(|i| adam_line[i].parse::<f64>());
        let (lr, beta1, beta2, epsilon) = match (lr, beta1, beta2, epsilon) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            _ => return Err(r.err("non-numeric adam hyperparameter")),
        };

        let config = NetworkConfig {
            variant,
            in_channels: input[0],
            classes,
            rows: input[1],
            cols: input[2],
            alpha,
            activation,
            conv_channels,
            fc_hidden,
            support_side,
        };
        let mut network = Network::build(&config, 0)?;
        let count: usize = r.num_field("tensors")?;
        if count != network.params().len() {
            return Err(r.err(format!(
                "checkpoint has {count} tensors, architecture needs {}",
                network.params().len()
            )));
        }
        let expected: Vec<Vec<usize>> = network.params().iter().map(|p| p.shape().to_vec()).collect();
        let mut read_block =
            |tag: &str| -> Result<Vec<Tensor>> { (0..count).map(|k| r.tensor(tag, k, &expected[k])).collect() };
        let params = read_block("param")?;
        let m = read_block("adam_m")?;
        let v = read_block("adam_v")?;
        for (dst, src) in network.params_mut().into_iter().zip(params) {
            *dst = src;
        }
        Ok(Checkpoint {
            network,
            adam: AdamState {
                step,
                lr,
                beta1,
                beta2,
                epsilon,
                m,
                v,
            },
            input_scale,
            rng,
            epoch,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

struct Reader<'a, I: Iterator<Item = (usize, &'a str)>> {
    lines: I,
    lineno: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Reader<'a, I> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.lineno, msg)
    }

    fn next_line(&mut self) -> Result<&'a str> {
        let (i, l) = self
            .lines
            .next()
            .ok_or_else(|| Error::parse(self.lineno + 1, "unexpected end of checkpoint"))?;
        self.lineno = i + 1;
        Ok(l)
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            None if line == key => Ok(""),
            _ => Err(self.err(format!("expected field {key:?}"))),
        }
    }

    fn num<T: std::str::FromStr>(&self, tok: &str) -> Result<T> {
        tok.trim()
            .parse()
            .map_err(|_| self.err(format!("non-numeric token {tok:?}")))
    }

    fn nums<T: std::str::FromStr>(&self, line: &str) -> Result<Vec<T>> {
        line.split_whitespace().map(|t| self.num(t)).collect()
    }

    fn num_field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        self.num(v)
    }

    fn nums_field<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let v = self.field(key)?;
        self.nums(v)
    }

    fn tensor(&mut self, tag: &str, k: usize, shape: &[usize]) -> Result<Tensor> {
        let head: Vec<usize> = self.nums_field(tag)?;
        if head.first() != Some(&k) || &head[1..] != shape {
            return Err(self.err(format!("{tag} {k}: expected shape {shape:?}")));
        }
        let line = self.next_line()?;
        let data: Vec<f64> = self.nums(line)?;
        Tensor::from_vec(shape, data).map_err(|e| self.err(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::Variant;
    use rand::Rng;

    fn sample(variant: Variant) -> Checkpoint {
        let cfg = NetworkConfig::new(variant, 4, 3, 8, 8);
        let network = Network::build(&cfg, 9).unwrap();
        let mut adam = AdamState::new(network.params(), 2e-4);
        adam.step = 7;
        for (n, t) in adam.m.iter_mut().enumerate() {
            t.fill(n as f64 * 1e-3 + 1.0 / 3.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let _: u64 = rng.random();
        Checkpoint {
            network,
            adam,
            input_scale: vec![0.1, 2.0 / 3.0, 7.0, 1e-300],
            rng,
            epoch: 12,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for v in [Variant::Lattice, Variant::Standard] {
            let ck = sample(v);
            let text = ck.to_text();
            let back = Checkpoint::parse(&text).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.to_text(), text);
            let (mut a, mut b) = (ck.rng.clone(), back.rng.clone());
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }

    #[test]
    fn rejects_version_and_shape_mismatch() {
        let text = sample(Variant::Lattice).to_text();
        assert!(Checkpoint::parse(&text.replace("v1", "v2")).is_err());
        assert!(Checkpoint::parse(&text.replace("classes 3", "classes 4")).is_err());
        assert!(Checkpoint::parse(&text[..text.len() / 2]).is_err());
    }
}
