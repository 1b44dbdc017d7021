use std::collections::BTreeMap;

use lifebench::curriculum::{
    from_json_str, generate_condensed, generate_dispersed, generate_interleaved,
    load_curriculum_file, save_curriculum_file, single_task, to_json_string, validate_curriculum,
    validate_with, Block, BlockType, Curriculum, CurriculumError, ExperienceLimit, RegisteredTask,
    TaskBlock, TaskRegistry, TaskVariantSpec,
};
use lifebench::gridworld::{SpaceDescriptor, TaskKind};
use proptest::prelude::*;

fn variant(
    task: &str,
    name: &str,
    params: &[(&str, i64)],
    limit: ExperienceLimit,
) -> TaskVariantSpec {
    TaskVariantSpec {
        task_name: task.into(),
        variant_name: name.into(),
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        limit,
        fixed_layout: false,
    }
}

fn block(block_type: BlockType, variants: Vec<TaskVariantSpec>) -> Block {
    Block {
        block_type,
        task_blocks: vec![TaskBlock {
            task_name: variants[0].task_name.clone(),
            variants,
        }],
    }
}

fn door_key(limit: u64) -> TaskVariantSpec {
    variant(
        "DoorKey",
        "S6",
        &[("size", 6)],
        ExperienceLimit::Episodes(limit),
    )
}

/// (task, variant) -> number of learning blocks training it.
fn training_counts(c: &Curriculum) -> BTreeMap<(String, String), usize> {
    let mut counts = BTreeMap::new();
    for b in c.blocks.iter().filter(|b| b.block_type == BlockType::Learn) {
        for v in b.variants() {
            *counts
                .entry((v.task_name.clone(), v.variant_name.clone()))
                .or_default() += 1;
        }
    }
    counts
}

fn assert_interleaved(c: &Curriculum) {
    assert_eq!(c.blocks.len() % 2, 1);
    for (i, b) in c.blocks.iter().enumerate() {
        let expected = if i % 2 == 0 {
            BlockType::Eval
        } else {
            BlockType::Learn
        };
        assert_eq!(b.block_type, expected, "block {i}");
    }
    let first = &c.blocks[0];
    assert!(c
        .blocks
        .iter()
        .filter(|b| b.block_type == BlockType::Eval)
        .all(|b| b == first));
}

fn learn_order(c: &Curriculum) -> Vec<(String, String)> {
    c.blocks
        .iter()
        .filter(|b| b.block_type == BlockType::Learn)
        .flat_map(|b| {
            b.variants()
                .map(|v| (v.task_name.clone(), v.variant_name.clone()))
        })
        .collect()
}

#[test]
fn condensed_structure_over_25_seeds() {
    let mut orders = Vec::new();
    for seed in 0..25u64 {
        let c = generate_condensed(300, 20, seed.wrapping_mul(0x9E37_79B9) ^ 5);
        assert_eq!(c.blocks.len(), 37);
        assert_eq!(c.count_blocks(BlockType::Learn), 18);
        assert_eq!(c.count_blocks(BlockType::Eval), 19);
        assert_interleaved(&c);
        let counts = training_counts(&c);
        assert_eq!(counts.len(), 18);
        assert!(counts.values().all(|&n| n == 1));
        for b in c.blocks.iter().filter(|b| b.block_type == BlockType::Learn) {
            assert_eq!(b.variants().count(), 1);
            assert_eq!(
                b.variants().next().unwrap().limit,
                ExperienceLimit::Episodes(300)
            );
        }
        let eval = &c.blocks[0];
        assert_eq!(eval.task_blocks.len(), 6);
        assert_eq!(eval.variants().count(), 18);
        assert!(eval
            .variants()
            .all(|v| v.limit == ExperienceLimit::Episodes(20)));
        assert!(c.order_seed.is_some());
        assert!(validate_curriculum(&c).is_empty());
        orders.push(learn_order(&c));
    }
    orders.sort();
    orders.dedup();
    assert!(orders.len() > 20, "seeds should give different orders");
}

#[test]
fn dispersed_structure_over_25_seeds() {
    for seed in 0..25u64 {
        let c = generate_dispersed(300, 20, seed);
        assert_eq!(c.blocks.len(), 109);
        assert_eq!(c.count_blocks(BlockType::Learn), 54);
        assert_eq!(c.count_blocks(BlockType::Eval), 55);
        assert_interleaved(&c);
        let counts = training_counts(&c);
        assert_eq!(counts.len(), 18);
        assert!(counts.values().all(|&n| n == 3));

        let order = learn_order(&c);
        let supers: Vec<&[(String, String)]> = order.chunks(18).collect();
        assert_eq!(supers.len(), 3);
        for s in &supers {
            let mut sorted = s.to_vec();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 18, "each superblock is a permutation");
        }
        assert!(supers[0] != supers[1] && supers[1] != supers[2] && supers[0] != supers[2]);
        assert!(c
            .variants()
            .filter(|v| v.limit != ExperienceLimit::Episodes(20))
            .all(|v| v.limit == ExperienceLimit::Episodes(100)));
        assert!(validate_curriculum(&c).is_empty());
    }
}

#[test]
fn dispersed_length_rounds_up() {
    let c = generate_dispersed(10, 1, 0);
    let learn = c
        .blocks
        .iter()
        .find(|b| b.block_type == BlockType::Learn)
        .unwrap();
    assert_eq!(
        learn.variants().next().unwrap().limit,
        ExperienceLimit::Episodes(4)
    );
    let c = generate_dispersed(1, 1, 0);
    let learn = c
        .blocks
        .iter()
        .find(|b| b.block_type == BlockType::Learn)
        .unwrap();
    assert_eq!(
        learn.variants().next().unwrap().limit,
        ExperienceLimit::Episodes(1)
    );
}

#[test]
fn interleave_shapes() {
    let eval = block(BlockType::Eval, vec![door_key(2)]);
    let lb = block(BlockType::Learn, vec![door_key(5)]);
    let c = generate_interleaved(vec![lb.clone()], eval.clone()).unwrap();
    assert_eq!(c.blocks, vec![eval.clone(), lb.clone(), eval.clone()]);

    let c = generate_interleaved(vec![lb.clone(); 18], eval.clone()).unwrap();
    assert_eq!(c.blocks.len(), 37);

    assert!(matches!(
        generate_interleaved(vec![], eval.clone()),
        Err(CurriculumError::NoLearningContent)
    ));
    assert!(generate_interleaved(vec![eval.clone()], eval.clone()).is_err());
    assert!(generate_interleaved(vec![lb.clone()], lb).is_err());
}

#[test]
fn task_name_mismatch_is_one_finding() {
    let mut c = generate_condensed(3, 1, 1);
    c.blocks[1].task_blocks[0].variants[0].task_name = "Unlock".into();
    c.blocks[1].task_blocks[0].variants[0].params = [("room_size".to_string(), 5)].into();
    let findings = validate_curriculum(&c);
    assert_eq!(findings.len(), 1, "{findings:?}");
    assert_eq!(findings[0].path, "blocks[1].task_blocks[0].variants[0]");
    assert!(findings[0].rule.contains("task_name mismatch"));
}

#[test]
fn mixed_action_spaces_are_one_finding() {
    let mut registry = TaskRegistry::builtin();
    registry.register(
        "FourAction",
        RegisteredTask::new(
            SpaceDescriptor {
                num_actions: 4,
                view: [7, 7, 3],
            },
            |_| Ok(()),
        ),
    );
    let lb = block(
        BlockType::Learn,
        vec![variant(
            "FourAction",
            "only",
            &[],
            ExperienceLimit::Steps(10),
        )],
    );
    let c = generate_interleaved(vec![lb], block(BlockType::Eval, vec![door_key(1)])).unwrap();
    let findings = validate_with(&c, &registry);
    assert_eq!(findings.len(), 1, "{findings:?}");
    assert!(findings[0].rule.contains("space mismatch"));
    assert_eq!(findings[0].path, "blocks[1].task_blocks[0].variants[0]");
    // Without the registration the same task is simply unknown.
    assert!(validate_curriculum(&c)[0].rule.contains("unknown task"));
}

#[test]
fn other_invariants_produce_findings() {
    let base = generate_interleaved(
        vec![block(BlockType::Learn, vec![door_key(3)])],
        block(BlockType::Eval, vec![door_key(1)]),
    )
    .unwrap();
    assert!(validate_curriculum(&base).is_empty());

    type Mutation = Box<dyn Fn(&mut Curriculum)>;
    let cases: Vec<(Mutation, &str)> = vec![
        (Box::new(|c| c.num_parallel_envs = 0), "num_parallel_envs"),
        (Box::new(|c| c.blocks.clear()), "blocks"),
        (Box::new(|c| c.blocks[1].task_blocks.clear()), "blocks[1]"),
        (
            Box::new(|c| c.blocks[1].task_blocks[0].variants.clear()),
            "blocks[1].task_blocks[0]",
        ),
        (
            Box::new(|c| c.blocks[1].task_blocks[0].variants[0].limit = ExperienceLimit::Steps(0)),
            "blocks[1].task_blocks[0].variants[0]",
        ),
        (
            Box::new(|c| {
                c.blocks[0].task_blocks[0].variants[0]
                    .params
                    .insert("size".into(), 99);
            }),
            "blocks[0].task_blocks[0].variants[0]",
        ),
        (
            Box::new(|c| {
                c.blocks[0].task_blocks[0].variants[0].params.clear();
            }),
            "blocks[0].task_blocks[0].variants[0]",
        ),
    ];
    for (mutate, path) in cases {
        let mut c = base.clone();
        mutate(&mut c);
        let findings = validate_curriculum(&c);
        assert_eq!(findings.len(), 1, "{path}: {findings:?}");
        assert_eq!(findings[0].path, path);
    }
}

#[test]
fn file_round_trip_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    for c in [
        generate_condensed(300, 20, 9),
        generate_dispersed(30, 2, 9),
        single_task(TaskKind::Unlock, 4),
    ] {
        save_curriculum_file(&c, &path).unwrap();
        assert_eq!(load_curriculum_file(&path).unwrap(), c);
        assert_eq!(
            to_json_string(&from_json_str(&to_json_string(&c)).unwrap()),
            to_json_string(&c)
        );
    }

    let text = to_json_string(&generate_condensed(300, 20, 9));
    let zero = text.replacen("\"episodes\": 300", "\"episodes\": 0", 1);
    match from_json_str(&zero) {
        Err(CurriculumError::Schema { location, .. }) => {
            assert!(location.contains(".limit"), "{location}")
        }
        other => panic!("expected schema error, got {other:?}"),
    }
    let foo = text.replacen("\"task\": \"SimpleCrossing\"", "\"task\": \"Foo\"", 1);
    match from_json_str(&foo) {
        Err(e @ CurriculumError::Resolution { .. }) => assert!(e.to_string().contains("Foo")),
        other => panic!("expected resolution error, got {other:?}"),
    }
    let extra = text.replacen("\"name\"", "\"colour\": 1, \"name\"", 1);
    assert!(matches!(
        from_json_str(&extra),
        Err(CurriculumError::Schema { .. })
    ));
    assert!(matches!(
        from_json_str("{"),
        Err(CurriculumError::Json { .. })
    ));
    assert!(matches!(
        load_curriculum_file(&dir.path().join("missing.json")),
        Err(CurriculumError::Io { .. })
    ));
}

#[test]
fn file_schema_keys() {
    let c = single_task(TaskKind::DoorKey, 2);
    let v: serde_json::Value = serde_json::from_str(&to_json_string(&c)).unwrap();
    assert_eq!(
        v,
        serde_json::json!({
            "name": "ste-DoorKey",
            "num_parallel_envs": 1,
            "order_seed": null,
            "blocks": [{
                "type": "learn",
                "task_blocks": [{
                    "task": "DoorKey",
                    "variants": [
                        {"variant": "S6", "params": {"size": 6}, "limit": {"episodes": 2}, "fixed_layout": false},
                        {"variant": "S8", "params": {"size": 8}, "limit": {"episodes": 2}, "fixed_layout": false},
                        {"variant": "S10", "params": {"size": 10}, "limit": {"episodes": 2}, "fixed_layout": false}
                    ]
                }]
            }]
        })
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_curricula_validate_and_are_deterministic(
        seed in any::<u64>(),
        ep in 1u64..1000,
        eval in 1u64..50,
    ) {
        for c in [generate_condensed(ep, eval, seed), generate_dispersed(ep, eval, seed)] {
            prop_assert!(validate_curriculum(&c).is_empty());
            prop_assert_eq!(c.order_seed, Some(seed));
            let again = if c.blocks.len() == 37 {
                generate_condensed(ep, eval, seed)
            } else {
                generate_dispersed(ep, eval, seed)
            };
            prop_assert_eq!(to_json_string(&c), to_json_string(&again));
            prop_assert_eq!(from_json_str(&to_json_string(&c)).unwrap(), c.clone());
            for (i, b) in c.blocks.iter().enumerate() {
                if b.block_type == BlockType::Learn {
                    prop_assert_eq!(c.blocks[i - 1].block_type, BlockType::Eval);
                    prop_assert_eq!(c.blocks[i + 1].block_type, BlockType::Eval);
                }
            }
        }
    }

    #[test]
    fn variant_multisets(seed in any::<u64>()) {
        let condensed = training_counts(&generate_condensed(5, 1, seed));
        prop_assert_eq!(condensed.len(), 18);
        prop_assert!(condensed.values().all(|&n| n == 1));
        let dispersed = training_counts(&generate_dispersed(5, 1, seed));
        prop_assert_eq!(dispersed.len(), 18);
        prop_assert!(dispersed.values().all(|&n| n == 3));
    }
}
