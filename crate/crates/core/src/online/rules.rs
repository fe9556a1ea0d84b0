use crate::error::Result;
use crate::model::PredictionVector;

use super::waterfill::waterfill_zero_base;
use super::{check_round, AllocatorKind, OnlineAllocator, RoundDecision, UniformOver};

pub fn uniform_step(n: usize, values: &[f64], over: UniformOver) -> Vec<f64> {
    if over == UniformOver::Nonzero {
        let active = values.iter().filter(|v| **v > 0.0).count();
        if active > 0 {
            let share = 1.0 / active as f64;
            return values.iter().map(|v| if *v > 0.0 { share } else { 0.0 }).collect();
        }
    }
    vec![1.0 / n as f64; n]
}

/// `x_i = (v_i / p_i) / sum_j (v_j / p_j)`; uniform when every value is zero.
pub fn proportional_step(values: &[f64], predictions: &[f64]) -> Vec<f64> {
    let weights: Vec<f64> = values.iter().zip(predictions).map(|(v, p)| v / p).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.into_iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / values.len() as f64; values.len()]
    }
}

/// Maximizes end-of-round NSW from the accrued utilities; uniform when
/// every value is zero.
pub fn myopic_greedy_step(accrued: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let mut x = waterfill_zero_base(accrued, values, 1.0)?;
    if values.iter().all(|v| *v == 0.0) {
        x.fill(1.0 / values.len() as f64);
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct Uniform {
    n: usize,
    over: UniformOver,
}

impl Uniform {
    pub fn new(n: usize, over: UniformOver) -> Self {
        Self { n, over }
    }
}

impl OnlineAllocator for Uniform {
    fn kind(&self) -> AllocatorKind {
        AllocatorKind::Uniform
    }

    fn num_agents(&self) -> usize {
        self.n
    }

    fn allocate(&mut self, values: &[f64]) -> Result<RoundDecision> {
        check_round(values, self.n)?;
        Ok(RoundDecision::plain(uniform_step(self.n, values, self.over)))
    }
}

/// Proportional sharing, optionally normalized by predictions.
#[derive(Debug, Clone)]
pub struct Proportional {
    scale: Vec<f64>,
    kind: AllocatorKind,
}

impl Proportional {
    pub fn unweighted(n: usize) -> Self {
        Self { scale: vec![1.0; n], kind: AllocatorKind::Proportional }
    }

    pub fn normalized(predictions: &PredictionVector) -> Self {
        Self { scale: predictions.as_slice().to_vec(), kind: AllocatorKind::NormalizedProportional }
    }
}

impl OnlineAllocator for Proportional {
    fn kind(&self) -> AllocatorKind {
        self.kind
    }

    fn num_agents(&self) -> usize {
        self.scale.len()
    }

    fn allocate(&mut self, values: &[f64]) -> Result<RoundDecision> {
        check_round(values, self.scale.len())?;
        Ok(RoundDecision::plain(proportional_step(values, &self.scale)))
    }
}

#[derive(Debug, Clone)]
pub struct MyopicGreedy {
    accrued: Vec<f64>,
}

impl MyopicGreedy {
    pub fn new(n: usize) -> Self {
        Self { accrued: vec![0.0; n] }
    }

    pub fn accrued(&self) -> &[f64] {
        &self.accrued
    }
}

impl OnlineAllocator for MyopicGreedy {
    fn kind(&self) -> AllocatorKind {
        AllocatorKind::MyopicGreedy
    }

    fn num_agents(&self) -> usize {
        self.accrued.len()
    }

    fn allocate(&mut self, values: &[f64]) -> Result<RoundDecision> {
        check_round(values, self.accrued.len())?;
        let x = myopic_greedy_step(&self.accrued, values)?;
        for ((u, v), xi) in self.accrued.iter_mut().zip(values).zip(&x) {
            *u += v * xi;
        }
        Ok(RoundDecision::plain(x))
    }
}
