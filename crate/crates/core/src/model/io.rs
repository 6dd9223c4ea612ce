use crate::tensor::{Container, Scalar};
use crate::text::WordTable;

use super::{EncoderModel, ModelConfig, ModelError};

impl<T: Scalar> EncoderModel<T> {
    /// Serializes parameters, batch-norm statistics and the config. Values
    /// are stored as `f32`.
    pub fn to_container(&self) -> Container {
        let mut c = Container::new();
        c.insert_text("model.config", self.config().to_toml());
        for (name, shape, values) in self.named_params() {
            c.insert_floats(name, shape, values.iter().map(|v| v.as_f64() as f32).collect());
        }
        for (l, b) in self.layers.iter().enumerate() {
            for (branch, s) in [("linear", &b.norm_linear), ("gate", &b.norm_gate)] {
                let f = |v: &[T]| v.iter().map(|x| x.as_f64() as f32).collect::<Vec<_>>();
                c.insert_floats(format!("layer{l}.{branch}_norm.running_mean"), vec![s.channels()], f(&s.running_mean));
                c.insert_floats(format!("layer{l}.{branch}_norm.running_var"), vec![s.channels()], f(&s.running_var));
                c.insert_floats(
                    format!("layer{l}.{branch}_norm.initialized"),
                    vec![1],
                    vec![if s.is_initialized() { 1.0 } else { 0.0 }],
                );
            }
        }
        c
    }

    pub fn from_container(c: &Container) -> Result<Self, ModelError> {
        let config = ModelConfig::from_toml(c.text("model.config")?)?;
        let (shape, _) = c.floats("words")?;
        if shape.len() != 2 || shape[1] != config.dim {
            return Err(ModelError::Checkpoint(format!(
                "word table shape {shape:?} does not match dim {}",
                config.dim
            )));
        }
        let words = WordTable::<T>::zeros(shape[0], shape[1]);
        let mut model = Self::build(&config, words, 0)?;
        for (name, values) in model.named_params_mut() {
            let (_, data) = c.floats(&name)?;
            if data.len() != values.len() {
                return Err(ModelError::Checkpoint(format!(
                    "`{name}` has {} values, expected {}",
                    data.len(),
                    values.len()
                )));
            }
            for (v, &d) in values.iter_mut().zip(data) {
                *v = T::of(d as f64);
            }
        }
        for (l, b) in model.layers.iter_mut().enumerate() {
            for (branch, s) in [("linear", &mut b.norm_linear), ("gate", &mut b.norm_gate)] {
                let (_, init) = c.floats(&format!("layer{l}.{branch}_norm.initialized"))?;
                if init.first() != Some(&1.0) {
                    continue;
                }
                let read = |key: &str| -> Result<Vec<T>, ModelError> {
                    let (_, d) = c.floats(&format!("layer{l}.{branch}_norm.{key}"))?;
                    Ok(d.iter().map(|&x| T::of(x as f64)).collect())
                };
                s.set_statistics(read("running_mean")?, read("running_var")?)?;
            }
        }
        Ok(model)
    }
}
