use indexmap::IndexMap;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Position of a parameter inside its [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
    pub trainable: bool,
    /// AdamW first moment.
    pub m: Tensor,
    /// AdamW second moment.
    pub v: Tensor,
}

impl Param {
    fn new(value: Tensor, trainable: bool) -> Self {
        let zeros = Tensor::zeros(value.shape());
        Param {
            grad: zeros.clone(),
            m: zeros.clone(),
            v: zeros,
            value,
            trainable,
        }
    }
}

/// Named parameters in insertion order, plus the optimizer step counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: IndexMap<String, Param>,
    step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor, trainable: bool) -> Result<ParamId> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(Error::InvalidConfig(format!("duplicate parameter name {name}")));
        }
        let (idx, _) = self.params.insert_full(name, Param::new(value, trainable));
        Ok(ParamId(idx))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    /// Drops every parameter inserted after the first `len`.
    pub(crate) fn truncate(&mut self, len: usize) {
        self.params.truncate(len);
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub(crate) fn advance_step(&mut self) -> u64 {
        self.step += 1;
        self.step
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.params.get_index_of(name).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        self.params.get_index(id.0).map(|(k, _)| k.as_str()).expect("param id")
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn by_name(&self, name: &str) -> Option<&Param> {
        self.params.get(name)
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Param> {
        self.params.get_mut(name)
    }

    pub fn set_trainable(&mut self, id: ParamId, trainable: bool) {
        self.params[id.0].trainable = trainable;
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Param)> {
        self.params
            .iter()
            .enumerate()
            .map(|(i, (k, p))| (ParamId(i), k.as_str(), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param)> {
        self.params.iter_mut().map(|(k, p)| (k.as_str(), p))
    }

    pub fn names(&self) -> Vec<String> {
        self.params.keys().cloned().collect()
    }

    pub fn trainable_names(&self) -> Vec<String> {
        self.params
            .iter()
            .filter(|(_, p)| p.trainable)
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Total number of scalars, and the number of trainable scalars.
    pub fn counts(&self) -> (usize, usize) {
        self.params.values().fold((0, 0), |(total, trainable), p| {
            let n = p.value.len();
            (total + n, trainable + if p.trainable { n } else { 0 })
        })
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Copies accumulated gradients into the store's `grad` slots.
    pub fn set_grads(&mut self, grads: &Grads) {
        for (i, p) in self.params.values_mut().enumerate() {
            match grads.slots.get(i).and_then(Option::as_ref) {
                Some(g) => p.grad.data_mut().copy_from_slice(g.data()),
                None => p.grad.fill(0.0),
            }
        }
    }

    /// Fresh zeroed gradient buffers for the trainable parameters.
    pub fn grad_buffers(&self) -> Grads {
        Grads {
            slots: self
                .params
                .values()
                .map(|p| p.trainable.then(|| Tensor::zeros(p.value.shape())))
                .collect(),
        }
    }

    /// Same as [`grad_buffers`](Self::grad_buffers) but allocates a slot for every parameter.
    pub fn full_grad_buffers(&self) -> Grads {
        Grads {
            slots: self
                .params
                .values()
                .map(|p| Some(Tensor::zeros(p.value.shape())))
                .collect(),
        }
    }

    pub fn values_equal(&self, other: &ParamStore) -> bool {
        self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|((ka, a), (kb, b))| ka == kb && a.value == b.value)
    }
}

/// Gradient accumulation buffers aligned with a [`ParamStore`].
///
/// Frozen parameters have no slot, and layers skip computing their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    slots: Vec<Option<Tensor>>,
}

impl Grads {
    pub fn wants(&self, id: ParamId) -> bool {
        matches!(self.slots.get(id.0), Some(Some(_)))
    }

    pub fn slot_mut(&mut self, id: ParamId) -> Option<&mut Tensor> {
        self.slots.get_mut(id.0).and_then(Option::as_mut)
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.slots.get(id.0).and_then(Option::as_ref)
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            if let (Some(a), Some(b)) = (a, b) {
                a.add_assign(b);
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.slots.iter().flatten().all(Tensor::all_finite)
    }
}
