//! Two-stage classification: a coarse model picks a cluster of classes, then
//! that cluster's fine model picks the class.

use super::model::HybridModel;
use crate::datasets::ClusterMap;
use crate::neural::Tensor;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CoarseToFine {
    pub coarse: HybridModel,
    /// One model per cluster, in cluster order.
    pub fine: Vec<HybridModel>,
    pub clusters: ClusterMap,
    /// The full fine label space.
    pub class_names: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompositePrediction {
    pub cluster: usize,
    /// Index into [`CoarseToFine::class_names`].
    pub label: usize,
}

impl CoarseToFine {
    /// `fine` pairs each cluster name with its model, in any order.
    pub fn new(
        coarse: HybridModel,
        mut fine: Vec<(String, HybridModel)>,
        clusters: ClusterMap,
        class_names: Vec<String>,
    ) -> Result<Self> {
        clusters.coarse_of(&class_names)?;
        if coarse.class_names != clusters.names() {
            return Err(Error::Config(format!(
                "coarse model classes {:?} differ from clusters {:?}",
                coarse.class_names,
                clusters.names()
            )));
        }
        let mut ordered = Vec::with_capacity(clusters.clusters.len());
        for cluster in &clusters.clusters {
            let pos = fine
                .iter()
                .position(|(name, _)| *name == cluster.name)
                .ok_or_else(|| Error::Config(format!("no fine model for cluster '{}'", cluster.name)))?;
            let (_, model) = fine.swap_remove(pos);
            if model.class_names != cluster.classes {
                return Err(Error::Config(format!(
                    "fine model for '{}' predicts {:?}, cluster holds {:?}",
                    cluster.name, model.class_names, cluster.classes
                )));
            }
            ordered.push(model);
        }
        if let Some((name, _)) = fine.first() {
            return Err(Error::Config(format!("fine model '{name}' matches no cluster")));
        }
        Ok(Self {
            coarse,
            fine: ordered,
            clusters,
            class_names,
        })
    }

    pub fn predict(&self, image: &Tensor) -> Result<CompositePrediction> {
        let cluster = self.coarse.predict(image)?;
        let local = self.fine[cluster].predict(image)?;
        let name = &self.clusters.clusters[cluster].classes[local];
        let label = self
            .class_names
            .iter()
            .position(|n| n == name)
            .expect("clusters partition the class names");
        Ok(CompositePrediction { cluster, label })
    }
}

/// Routes `image` through `coarse` and the matching entry of `fine`.
pub fn coarse_to_fine_predict(
    coarse: &HybridModel,
    fine: &[(String, HybridModel)],
    clusters: &ClusterMap,
    class_names: &[String],
    image: &Tensor,
) -> Result<usize> {
    clusters.coarse_of(class_names)?;
    let cluster = coarse.predict(image)?;
    let c = clusters
        .clusters
        .get(cluster)
        .ok_or_else(|| Error::Config(format!("coarse prediction {cluster} has no cluster")))?;
    let (_, model) = fine
        .iter()
        .find(|(name, _)| *name == c.name)
        .ok_or_else(|| Error::Config(format!("no fine model for cluster '{}'", c.name)))?;
    let local = model.predict(image)?;
    let name = c
        .classes
        .get(local)
        .ok_or_else(|| Error::Config(format!("fine model for '{}' has too many classes", c.name)))?;
    Ok(class_names.iter().position(|n| n == name).expect("checked partition"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::EUROSAT_CLASSES;
    use crate::hybrid::model::{CnnConfig, ConvStage, ModelConfig, ModelKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> ModelConfig {
        ModelConfig {
            kind: ModelKind::RealAmplitudes,
            cnn: CnnConfig {
                stages: vec![ConvStage { channels: 2, kernel: 3, pool: true }],
                dense_units: 4,
            },
        }
    }

    fn setup() -> (HybridModel, Vec<(String, HybridModel)>, ClusterMap, Vec<String>) {
        let map = ClusterMap::default();
        let names: Vec<String> = EUROSAT_CLASSES.iter().map(|s| s.to_string()).collect();
        let coarse = HybridModel::new(&cfg(), [3, 8, 8], map.names(), 1).unwrap();
        let fine = map
            .clusters
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), HybridModel::new(&cfg(), [3, 8, 8], c.classes.clone(), 10 + i as u64).unwrap()))
            .collect();
        (coarse, fine, map, names)
    }

    #[test]
    fn routed_label_lies_in_selected_cluster() {
        let (coarse, fine, map, names) = setup();
        let composite = CoarseToFine::new(coarse.clone(), fine.clone(), map.clone(), names.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let img = crate::neural::Tensor::uniform(&[3, 8, 8], 0.5, &mut rng).map(|v| v + 0.5);
            let p = composite.predict(&img).unwrap();
            assert!(map.clusters[p.cluster].classes.contains(&names[p.label]));
            assert_eq!(p.cluster, coarse.predict(&img).unwrap());
            assert_eq!(coarse_to_fine_predict(&coarse, &fine, &map, &names, &img).unwrap(), p.label);
        }
    }

    #[test]
    fn missing_fine_model_is_a_config_error() {
        let (coarse, mut fine, map, names) = setup();
        fine.pop();
        let img = crate::neural::Tensor::filled(&[3, 8, 8], 0.5);
        assert!(matches!(
            CoarseToFine::new(coarse.clone(), fine.clone(), map.clone(), names.clone()),
            Err(Error::Config(_))
        ));
        // free function fails only when routed to the missing cluster
        let r = coarse_to_fine_predict(&coarse, &fine, &map, &names, &img);
        if coarse.predict(&img).unwrap() == 2 {
            assert!(matches!(r, Err(Error::Config(_))));
        }
    }
}
