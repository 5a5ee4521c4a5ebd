//! The named experiment grids and the model behind each row.

use chapterfn_core::classic::Family;
use chapterfn_core::features::Characteristics;
use chapterfn_core::pipeline::TextField;
use chapterfn_core::{Error, Result};
use chapterfn_neural::{Base, ContentEncoder, Direction, FusionEncoder, FusionSpec, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    MlCont,
    MlTitle,
    MlContExt,
    MlTitleExt,
    DlCont,
    DlTitle,
    DlContExt1,
    DlContExt2,
    DlTitleExt1,
    DlTitleExt2,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 10] = [
        ExperimentId::MlCont,
        ExperimentId::MlTitle,
        ExperimentId::MlContExt,
        ExperimentId::MlTitleExt,
        ExperimentId::DlCont,
        ExperimentId::DlTitle,
        ExperimentId::DlContExt1,
        ExperimentId::DlContExt2,
        ExperimentId::DlTitleExt1,
        ExperimentId::DlTitleExt2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::MlCont => "ML-cont",
            ExperimentId::MlTitle => "ML-title",
            ExperimentId::MlContExt => "ML-cont-ext",
            ExperimentId::MlTitleExt => "ML-title-ext",
            ExperimentId::DlCont => "DL-cont",
            ExperimentId::DlTitle => "DL-title",
            ExperimentId::DlContExt1 => "DL-cont-ext1",
            ExperimentId::DlContExt2 => "DL-cont-ext2",
            ExperimentId::DlTitleExt1 => "DL-title-ext1",
            ExperimentId::DlTitleExt2 => "DL-title-ext2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        ExperimentId::ALL.into_iter().find(|e| e.name().eq_ignore_ascii_case(s)).ok_or_else(|| {
            let valid: Vec<&str> = ExperimentId::ALL.iter().map(|e| e.name()).collect();
            Error::Config(format!("unknown experiment `{s}`; valid ids: {}", valid.join(", ")))
        })
    }

    /// Classical grids run k-fold cross-validation; neural grids use the
    /// 8:1:1 hold-out split.
    pub fn is_neural(self) -> bool {
        self.name().starts_with("DL")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowModel {
    Classic { family: Family, field: TextField, characteristics: Characteristics },
    Neural(ModelSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowSpec {
    pub name: String,
    pub model: RowModel,
}

fn classic(name: String, family: Family, field: TextField, characteristics: Characteristics) -> RowSpec {
    RowSpec { name, model: RowModel::Classic { family, field, characteristics } }
}

fn neural(name: impl Into<String>, spec: ModelSpec) -> RowSpec {
    RowSpec { name: name.into(), model: RowModel::Neural(spec) }
}

const FAMILIES: [Family; 4] = [Family::Nb, Family::Lr, Family::Knn, Family::Svm];

/// The eight subsets of {loc, cite, f&t} in table order.
pub fn characteristic_subsets() -> [Characteristics; 8] {
    let c = |loc, cite, ft| Characteristics { loc, cite, ft };
    [
        c(false, false, false),
        c(true, false, false),
        c(false, true, false),
        c(false, false, true),
        c(true, true, false),
        c(true, false, true),
        c(false, true, true),
        c(true, true, true),
    ]
}

fn fusion(window: usize, direction: Direction, base: Base, enc: FusionEncoder) -> FusionSpec {
    FusionSpec { window, direction, base, fusion_encoder: enc }
}

fn around(w: usize, d: Direction) -> String {
    let d = match d {
        Direction::Both => "previous+next",
        Direction::Previous => "previous",
        Direction::Next => "next",
    };
    format!("Around{w} ({d})")
}

const DIRECTIONS: [Direction; 3] = [Direction::Both, Direction::Previous, Direction::Next];

/// Rows of experiment `id`, in table order.
pub fn grid(id: ExperimentId) -> Vec<RowSpec> {
    use ExperimentId::*;
    let hier = ContentEncoder::Hierarchical;
    match id {
        MlCont | MlTitle => {
            let field = if id == MlCont { TextField::Content } else { TextField::Title };
            FAMILIES.iter().map(|&f| classic(f.name().into(), f, field, Characteristics::NONE)).collect()
        }
        MlContExt => {
            let mut rows: Vec<RowSpec> = characteristic_subsets()
                .iter()
                .map(|&c| classic(format!("LR{}", c.suffix()), Family::Lr, TextField::Content, c))
                .collect();
            for f in [Family::Nb, Family::Knn, Family::Svm] {
                rows.push(classic(format!("{}{}", f.name(), Characteristics::ALL.suffix()), f, TextField::Content, Characteristics::ALL));
            }
            rows
        }
        MlTitleExt => FAMILIES
            .iter()
            .flat_map(|&f| {
                [Characteristics::NONE, Characteristics::ALL]
                    .map(|c| classic(format!("{}(title+content){}", f.name(), c.suffix()), f, TextField::TitleContent, c))
            })
            .collect(),
        DlCont => vec![
            neural("Bi-LSTM", ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::Bilstm)),
            neural("Hierarchical Bi-LSTM", ModelSpec::new(FusionSpec::baseline(Base::Content), hier)),
            neural("Hierarchical Bi-LSTM+attention", ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::HierarchicalAttention)),
        ],
        DlTitle => vec![neural("CNN", ModelSpec::new(FusionSpec::baseline(Base::Title), hier))],
        DlContExt1 => {
            let mut rows = vec![neural("Baseline", ModelSpec::new(FusionSpec::baseline(Base::Content), hier))];
            for p in [10, 20, 30, 40] {
                let spec = ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::HeadTail(p as f64 / 100.0));
                rows.push(neural(format!("Head+tail {p}%"), spec));
            }
            for p in [20, 40, 60, 80] {
                let spec = ModelSpec::new(FusionSpec::baseline(Base::Content), ContentEncoder::Head(p as f64 / 100.0));
                rows.push(neural(format!("Head {p}%"), spec));
            }
            rows
        }
        DlContExt2 | DlTitleExt1 => {
            let base = if id == DlContExt2 { Base::Content } else { Base::Title };
            let mut rows = vec![neural("Baseline", ModelSpec::new(FusionSpec::baseline(base), hier))];
            for w in 1..=3 {
                for d in DIRECTIONS {
                    rows.push(neural(around(w, d), ModelSpec::new(fusion(w, d, base, FusionEncoder::Bilstm), hier)));
                }
            }
            if id == DlTitleExt1 {
                for w in 1..=3 {
                    let spec = ModelSpec::new(fusion(w, Direction::Both, base, FusionEncoder::Cnn), hier);
                    rows.push(neural(format!("{} CNN fusion", around(w, Direction::Both)), spec));
                }
            }
            rows
        }
        DlTitleExt2 => {
            let mut rows = vec![neural("Title+Text", ModelSpec::new(FusionSpec::baseline(Base::TitleContent), hier))];
            for w in 1..=3 {
                let spec = ModelSpec::new(fusion(w, Direction::Both, Base::TitleContent, FusionEncoder::Cnn), hier);
                rows.push(neural(format!("Title+Text Around{w}"), spec));
            }
            rows
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_and_unknown_lists_valid() {
        for id in ExperimentId::ALL {
            assert_eq!(ExperimentId::parse(id.name()).unwrap(), id);
        }
        let err = ExperimentId::parse("ML-foo").unwrap_err().to_string();
        assert!(err.contains("DL-title-ext2"), "{err}");
    }

    #[test]
    fn grid_shapes() {
        let n = |id| grid(id).len();
        assert_eq!(n(ExperimentId::MlCont), 4);
        assert_eq!(n(ExperimentId::MlContExt), 11);
        assert_eq!(n(ExperimentId::MlTitleExt), 8);
        assert_eq!(n(ExperimentId::DlCont), 3);
        let ext1 = grid(ExperimentId::DlContExt1);
        assert_eq!(ext1.len() - 1, 8);
        let ext2 = grid(ExperimentId::DlContExt2);
        assert_eq!(ext2.len() - 1, 9);
        assert_eq!(ext2[1].name, "Around1 (previous+next)");
        assert_eq!(n(ExperimentId::DlTitleExt1), 13);
        assert_eq!(n(ExperimentId::DlTitleExt2), 4);
        for id in ExperimentId::ALL {
            let rows = grid(id);
            let mut names: Vec<_> = rows.iter().map(|r| r.name.clone()).collect();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), rows.len(), "{id:?} has duplicate rows");
            for r in rows {
                assert_eq!(matches!(r.model, RowModel::Neural(_)), id.is_neural());
                if let RowModel::Neural(spec) = r.model {
                    spec.validate().unwrap();
                }
            }
        }
    }
}
