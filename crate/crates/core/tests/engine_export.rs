use cabsim::engine::export::{regret_csv_header, BETA_CSV_HEADER, EPOCH_STATS_CSV_HEADER, LEMMA1_CSV_HEADER};
use cabsim::engine::{
    export, read_json, run_batch, to_csv_string, Experiment, ExperimentConfig, ExportFormat, ModelPair, Outcome,
};
use cabsim::zerogap::ZeroGapReward;
use cabsim::{CabInstance, Policy, RewardModel, Theta};

fn bern(p: f64) -> RewardModel {
    RewardModel::bernoulli(p).unwrap()
}

fn configs() -> Vec<ExperimentConfig> {
    let inst = CabInstance::bernoulli(0.9, 0.5, 0.5).unwrap();
    let half = ZeroGapReward::model(bern(0.5));
    vec![
        ExperimentConfig::new(Experiment::EtcRegret { instance: inst.clone(), delta: 0.3 }, 2000, 8, 1),
        ExperimentConfig::new(
            Experiment::AlgRegret {
                instance: inst,
                policy: Policy::UCB1,
                schedule: Theta::regret_preset(),
                reference_beta: Some(0.4),
                reference_c2: Some(10.0),
            },
            2000,
            8,
            2,
        ),
        ExperimentConfig::new(
            Experiment::Zerogap { policy: Policy::UCB1, reward1: half, reward2: half, bins: 10, epsilons: vec![0.45] },
            500,
            8,
            3,
        ),
        ExperimentConfig::new(
            Experiment::Beta {
                pairs: vec![ModelPair::symmetric_bernoulli(0.4).unwrap()],
                schedule: Theta::beta_preset(),
                diagnostic: false,
            },
            1000,
            8,
            4,
        ),
        ExperimentConfig::new(
            Experiment::Lemma1 { model1: bern(0.9), model2: bern(0.5), schedule: Theta::regret_preset() },
            1000,
            8,
            5,
        ),
        ExperimentConfig::new(
            Experiment::EpochStats {
                model1: bern(0.5),
                model2: bern(0.5),
                schedule: Theta::regret_preset(),
                policy: Policy::UCB1,
            },
            1000,
            8,
            6,
        ),
    ]
}

#[test]
fn json_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for (k, cfg) in configs().into_iter().enumerate() {
        let res = run_batch(&cfg, 2).unwrap();
        let path = dir.path().join(format!("r{k}.json"));
        export(&res, ExportFormat::Json, &path).unwrap();
        assert_eq!(read_json(&path).unwrap(), res, "{:?}", cfg.kind());
    }
}

#[test]
fn exports_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    for (k, cfg) in configs().into_iter().enumerate() {
        for format in [ExportFormat::Csv, ExportFormat::Json] {
            let a = dir.path().join(format!("a{k}.{format}"));
            let b = dir.path().join(format!("b{k}.{format}"));
            export(&run_batch(&cfg, 1).unwrap(), format, &a).unwrap();
            export(&run_batch(&cfg, 3).unwrap(), format, &b).unwrap();
            assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        }
    }
}

#[test]
fn config_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in configs() {
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, cfg.to_json()).unwrap();
        let back = ExperimentConfig::load(&path).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn csv_headers_match_schema() {
    let expected = [
        None,
        None,
        Some("policy,seed,n,N1_over_n"),
        Some(BETA_CSV_HEADER),
        Some(LEMMA1_CSV_HEADER),
        Some(EPOCH_STATS_CSV_HEADER),
    ];
    for (cfg, want) in configs().into_iter().zip(expected) {
        let res = run_batch(&cfg, 1).unwrap();
        let csv = to_csv_string(&res).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), format!("# config_hash: {}", res.config_hash));
        let header = lines.next().unwrap();
        match want {
            Some(h) => assert_eq!(header, h),
            None => {
                let Outcome::Regret(agg) = &res.outcome else { panic!() };
                let cps: Vec<u64> = agg.checkpoints.iter().map(|c| c.checkpoint).collect();
                assert_eq!(header, regret_csv_header(&cps));
            }
        }
    }
    assert_eq!(BETA_CSV_HEADER, "delta,m0,gamma,M,reps,beta_hat,std_error,checkpoint,survival");
}

#[test]
fn alg_growth_on_a_schedule_with_positive_survival() {
    // With m0 = 4000, heterogeneous pairs survive with probability near the
    // gap, and regret grows far slower than linearly.
    let cfg = ExperimentConfig::new(
        Experiment::AlgRegret {
            instance: CabInstance::bernoulli(0.9, 0.5, 0.5).unwrap(),
            policy: Policy::UCB1,
            schedule: Theta::beta_preset(),
            reference_beta: None,
            reference_c2: None,
        },
        40_000,
        200,
        12,
    );
    let Outcome::Regret(agg) = run_batch(&cfg, 2).unwrap().outcome else { panic!() };
    let ratio = agg.at(40_000).unwrap().mean / agg.at(10_000).unwrap().mean;
    assert!(ratio < 2.0, "ratio {ratio}");
}
