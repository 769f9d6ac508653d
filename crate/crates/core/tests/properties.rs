use approx::assert_relative_eq;
use proptest::prelude::*;

use ehs_sim::control::{pid_step, PidGains, PidState};
use ehs_sim::ehs::{lump_kinematics, reaction_wrench, EhsMassModel, MassSplit};
use ehs_sim::engine::{accumulate_impulse, ImpulseAccumulator, Telemetry};
use ehs_sim::scissor::{
    actuation_from_extension, calibrate_from_envelope, end_effector_pose, extension_from_actuation,
    extension_jacobian, EhsJointState, MountFrame, ScissorParams,
};
use ehs_sim::spatial::{
    euler_to_rotation, integrate_step, rotation_to_euler, Frame, Mat3, Pose, RigidBodyState, Vec3, Wrench,
};
use ehs_sim::trajectory::{joint_trajectory_eval, TrapezoidProfile};
use ehs_sim::vehicle::{
    apply_saturation, derive_box_inertia, step_coupled, system_momentum, ActuatorLimits, ControlCommand, EhsUnit,
    JointEfforts, JointFriction, SystemState, VehicleConfig,
};

fn params() -> ScissorParams {
    calibrate_from_envelope(5.026, 24, 0.1).unwrap()
}

fn unit() -> EhsUnit {
    let params = params();
    EhsUnit {
        mount: MountFrame {
            offset: Vec3::new(0.12315, 0.0, 0.0),
            rotation: euler_to_rotation(0.0, std::f64::consts::FRAC_PI_2, 0.0),
        },
        mass: EhsMassModel::from_split(2.41, MassSplit::default(), &params).unwrap(),
        params,
        friction: JointFriction::default(),
    }
}

fn vehicle() -> VehicleConfig {
    let dims = Vec3::new(0.2463, 0.2463, 0.454);
    VehicleConfig {
        dry_mass: 27.7,
        dims,
        inertia: derive_box_inertia(27.7, dims),
        units: vec![unit()],
        limits: ActuatorLimits::default(),
    }
}

proptest! {
    #[test]
    fn ik_round_trip(frac in 0.005f64..=1.0) {
        let p = params();
        let y = frac * p.half_link_length;
        let back = actuation_from_extension(extension_from_actuation(y, &p).unwrap(), &p).unwrap();
        prop_assert!((back - y).abs() < 1e-9);
    }

    #[test]
    fn extension_strictly_decreasing(a in 1e-4f64..0.9999, b in 1e-4f64..0.9999) {
        prop_assume!((a - b).abs() > 1e-9);
        let p = params();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let x_lo = extension_from_actuation(lo * p.half_link_length, &p).unwrap();
        let x_hi = extension_from_actuation(hi * p.half_link_length, &p).unwrap();
        prop_assert!(x_lo > x_hi);
        prop_assert!(extension_jacobian(hi * p.half_link_length, &p).unwrap() < 0.0);
    }

    #[test]
    fn calibration_fixpoint(max in 1.0f64..20.0, pairs in 2u32..40, clearance in 0.01f64..0.5) {
        let p = calibrate_from_envelope(max, 2 * pairs, clearance).unwrap();
        let x0 = extension_from_actuation(0.0, &p).unwrap();
        prop_assert!((x0 - max).abs() <= 4.0 * f64::EPSILON * max);
    }

    #[test]
    fn effector_distance_is_extension(pan in -3.0f64..3.0, pitch in -1.5f64..1.5, frac in 0.005f64..0.995) {
        let p = params();
        let mount = MountFrame { offset: Vec3::new(0.1, -0.2, 0.3), rotation: euler_to_rotation(0.3, -0.2, 1.0) };
        let base = RigidBodyState::at_rest(Pose::from_tuple([1.0, 2.0, 3.0, 0.5, 0.1, -0.4]));
        let joints = EhsJointState { pan, pitch, actuation: frac * p.half_link_length, ..Default::default() };
        let tip = end_effector_pose(&joints, &p, &mount, &base).unwrap();
        let mount_origin = base.position + base.attitude * mount.offset;
        let x = extension_from_actuation(joints.actuation, &p).unwrap();
        prop_assert!(((tip.position - mount_origin).norm() - x).abs() < 1e-12 * x.max(1.0) * 8.0);
    }

    #[test]
    fn euler_round_trip(a in -3.1f64..3.1, b in -1.56f64..1.56, g in -3.1f64..3.1) {
        let (a2, b2, g2) = rotation_to_euler(&euler_to_rotation(a, b, g));
        prop_assert!((a - a2).abs() < 1e-9);
        prop_assert!((b - b2).abs() < 1e-9);
        prop_assert!((g - g2).abs() < 1e-9);
    }

    #[test]
    fn wrench_frame_round_trip(f in prop::array::uniform3(-1.0f64..1.0), t in prop::array::uniform3(-1.0f64..1.0),
                               e in prop::array::uniform3(-1.5f64..1.5)) {
        let q = euler_to_rotation(e[0], e[1], e[2]);
        let w = Wrench::new(Vec3::from(f), Vec3::from(t), Frame::Body);
        let back = w.to_inertial(&q).to_body(&q);
        prop_assert!((back.force - w.force).norm() < 1e-14);
        prop_assert!((back.torque - w.torque).norm() < 1e-14);
    }

    #[test]
    fn saturation_idempotent_and_bounded(f in prop::array::uniform3(-1.0f64..1.0), t in prop::array::uniform3(-1.0f64..1.0),
                                         j in prop::array::uniform3(-100.0f64..100.0)) {
        let limits = ActuatorLimits::default();
        let cmd = ControlCommand {
            body: Wrench::new(Vec3::from(f), Vec3::from(t), Frame::Inertial),
            joints: vec![JointEfforts::from_array(j)],
        };
        let q = euler_to_rotation(0.0, 0.0, 0.0);
        let (once, _) = apply_saturation(&cmd, &limits, &q);
        let (twice, flags) = apply_saturation(&once, &limits, &q);
        prop_assert_eq!(&once, &twice);
        prop_assert!(flags.is_empty());
        for i in 0..3 {
            prop_assert!(once.body.force[i].abs() <= limits.body_force_n);
            prop_assert!(once.body.torque[i].abs() <= limits.body_torque_n_m);
        }
        let e = once.joints[0];
        prop_assert!(e.pan.abs() <= limits.revolute_torque_n_m && e.pitch.abs() <= limits.revolute_torque_n_m);
        prop_assert!(e.actuation.abs() <= limits.prismatic_force_n);
    }

    #[test]
    fn saturation_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let limits = ActuatorLimits::default();
        let q = euler_to_rotation(0.0, 0.0, 0.0);
        let sat = |v: f64| {
            let c = ControlCommand { body: Wrench::new(Vec3::new(v, 0.0, 0.0), Vec3::zeros(), Frame::Inertial), joints: vec![] };
            apply_saturation(&c, &limits, &q).0.body.force.x
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(sat(lo) <= sat(hi));
    }

    #[test]
    fn impulse_unsigned_dominates_net(forces in prop::collection::vec(prop::array::uniform3(-0.1f64..0.1), 1..200)) {
        let mut acc = ImpulseAccumulator::default();
        for f in forces {
            acc = accumulate_impulse(acc, &Vec3::from(f), 0.01);
            for i in 0..3 {
                prop_assert!(acc.unsigned[i] >= acc.net[i].abs());
            }
        }
    }

    #[test]
    fn pid_integral_stays_clamped(errors in prop::collection::vec(-10.0f64..10.0, 1..300)) {
        let g = PidGains { kp: 1.0, ki: 2.0, kd: 0.1, integral_clamp: 0.5, output_clamp: 1.0 };
        let mut s = PidState::default();
        for e in errors {
            let (u, n) = pid_step(s, &g, e, 0.0, 0.05);
            prop_assert!(u.abs() <= g.output_clamp);
            prop_assert!(n.integral.abs() <= g.integral_clamp);
            s = n;
        }
    }

    #[test]
    fn trapezoid_properties(d in 0.1f64..100.0, total in 10.0f64..1000.0, frac in 0.01f64..0.5) {
        let p = TrapezoidProfile::new(d, total, frac * total).unwrap();
        prop_assert_eq!(p.eval(total).position, d);
        let n = 2000;
        let mut prev = p.eval(0.0);
        let mut integral = 0.0;
        let dt = total / n as f64;
        for k in 1..=n {
            let s = p.eval(k as f64 * dt);
            prop_assert!(s.position >= prev.position);
            prop_assert!((s.rate - prev.rate).abs() <= p.accel() * dt * (1.0 + 1e-9));
            integral += 0.5 * (s.rate + prev.rate) * dt;
            prev = s;
        }
        // Trapezoid quadrature is exact except in the two cells holding a corner.
        prop_assert!((integral - d).abs() <= 2.0 * p.accel() * dt * dt + 1e-9 * d);
    }

    #[test]
    fn telemetry_csv_round_trip(values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 42)) {
        let mut row = [0.0; 42];
        row.copy_from_slice(&values);
        let t = Telemetry { rows: vec![row] };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Telemetry::read_csv(buf.as_slice()).unwrap();
        for (a, b) in row.iter().zip(back.rows[0].iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coupled_step_conserves_momentum_under_internal_efforts(
        efforts in prop::array::uniform3(-0.2f64..0.2),
        spin in prop::array::uniform3(-0.05f64..0.05),
        frac in 0.3f64..0.9,
    ) {
        let config = vehicle();
        let p = config.units[0].params;
        let mut state = SystemState {
            base: RigidBodyState { angular_velocity: Vec3::from(spin), ..RigidBodyState::at_rest(Pose::from_tuple([0.0, 0.0, 0.0, 0.2, -0.1, 0.4])) },
            joints: vec![EhsJointState { pan: 0.3, pitch: -0.2, actuation: frac * p.half_link_length, ..Default::default() }],
        };
        let cmd = ControlCommand { body: Wrench::zero(Frame::Inertial), joints: vec![JointEfforts::from_array(efforts)] };
        let m0 = system_momentum(&config, &state).unwrap();
        for _ in 0..2000 {
            state = step_coupled(&config, &state, &cmd, 1e-3).unwrap().state;
        }
        let m1 = system_momentum(&config, &state).unwrap();
        prop_assert!((m1.linear - m0.linear).norm() < 1e-12);
        prop_assert!((m1.angular - m0.angular).norm() < 1e-10);
        // Spinning about the base origin carries linear momentum; the CoM drifts uniformly.
        let drift = m0.linear * (2.0 / config.total_mass());
        prop_assert!((m1.com - m0.com - drift).norm() < 1e-12);
    }
}

#[test]
fn torque_free_angular_momentum_norm() {
    let inertia = Mat3::new(0.9, 0.05, -0.02, 0.05, 0.6, 0.03, -0.02, 0.03, 0.3);
    let mut s = RigidBodyState {
        angular_velocity: Vec3::new(0.4, -0.7, 1.1),
        ..RigidBodyState::default()
    };
    let l0 = (s.attitude * (inertia * s.angular_velocity)).norm();
    let zero = Wrench::zero(Frame::Body);
    for _ in 0..100_000 {
        s = integrate_step(&s, 10.0, &inertia, &zero, 1e-3).unwrap();
    }
    let l1 = (s.attitude * (inertia * s.angular_velocity)).norm();
    assert!(((l1 - l0) / l0).abs() < 1e-5, "relative change {}", (l1 - l0) / l0);
}

#[test]
fn constant_force_parabola() {
    let f = Vec3::new(0.1, -0.05, 0.02);
    let m = 30.11;
    let v0 = Vec3::new(0.01, 0.02, -0.03);
    let mut s = RigidBodyState {
        linear_velocity: v0,
        ..RigidBodyState::default()
    };
    let w = Wrench::new(f, Vec3::zeros(), Frame::Inertial);
    let dt = 1e-3;
    let n = 10_000;
    for _ in 0..n {
        s = integrate_step(&s, m, &Mat3::identity(), &w, dt).unwrap();
    }
    let t = n as f64 * dt;
    let exact = v0 * t + f * (0.5 * t * t / m);
    assert_relative_eq!(s.position, exact, max_relative = 1e-8);
    assert_relative_eq!(s.linear_velocity, v0 + f * (t / m), max_relative = 1e-8);
}

#[test]
fn zero_command_momentum_over_a_million_steps() {
    let config = vehicle();
    let p = config.units[0].params;
    let mut state = SystemState {
        base: RigidBodyState {
            linear_velocity: Vec3::new(0.01, -0.02, 0.005),
            angular_velocity: Vec3::new(0.001, 0.002, -0.001),
            ..RigidBodyState::default()
        },
        joints: vec![EhsJointState {
            pan: 0.5,
            actuation: 0.5 * p.half_link_length,
            pan_rate: 0.001,
            ..Default::default()
        }],
    };
    let cmd = ControlCommand::zero(1);
    let m0 = system_momentum(&config, &state).unwrap();
    for _ in 0..1_000_000 {
        state = step_coupled(&config, &state, &cmd, 1e-3).unwrap().state;
    }
    let m1 = system_momentum(&config, &state).unwrap();
    assert!((m1.linear - m0.linear).norm() < 1e-9);
}

#[test]
fn reaction_integral_vanishes_over_rest_to_rest_move() {
    let u = unit();
    let p = u.params;
    let start = EhsJointState::folded(&p);
    let goal = EhsJointState {
        pan: 1.0,
        pitch: 0.3,
        actuation: actuation_from_extension(3.0, &p).unwrap(),
        ..Default::default()
    };
    let profile = TrapezoidProfile::new(1.0, 60.0, 15.0).unwrap();
    let base = RigidBodyState::default();
    let dt = 1e-3;
    let n = (60.0 / dt) as usize;
    let mut sum = Vec3::zeros();
    // Midpoint rule: the profile corners sit on cell boundaries.
    for k in 0..n {
        let r = joint_trajectory_eval(&start, &goal, &profile, &p, (k as f64 + 0.5) * dt).unwrap();
        let w = reaction_wrench(&r.joints, r.accels, &p, &u.mass, &u.mount, &base).unwrap();
        sum += w.force * dt;
    }
    assert!(sum.norm() < 1e-6, "net reaction impulse {sum:?}");
    // Sanity: the boom did carry momentum mid-move.
    let mid = joint_trajectory_eval(&start, &goal, &profile, &p, 30.0).unwrap();
    let lumps = lump_kinematics(&mid.joints, &p, &u.mass, &u.mount).unwrap();
    let qd = Vec3::from(mid.joints.rates());
    let momentum: Vec3 = lumps.iter().map(|l| l.jacobian * qd * l.mass).sum();
    assert!(momentum.norm() > 1e-3);
}
