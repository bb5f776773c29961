"""Pure-Python reference implementation of the per-tick numerical kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and the same floating-point operation order, so both backends produce
bit-identical results. Keep the two files in lockstep.
"""

from math import exp, pi, sqrt

RPM_TO_RAD = pi / 30.0
EPS_T = 1e-9

# inverter state layout, one block of INV_STRIDE doubles per wheel
INV_TIMER = 0
INV_EXHAUSTED = 1
INV_MOTOR_T = 2
INV_IGBT_T = 3
INV_TORQUE = 4
INV_P_DC = 5
INV_P_MECH = 6
INV_ENVELOPE = 7
INV_STRIDE = 8

# inverter parameter vector
IP_T_MAX = 0
IP_T_RATED = 1
IP_P_MAX = 2
IP_V_REF = 3
IP_N_MAX = 4
IP_ETA = 5
IP_WINDOW = 6
IP_MOTOR_LIMIT = 7
IP_IGBT_LIMIT = 8
IP_BAND = 9
IP_TAU = 10
IP_T_AMB = 11
IP_MOTOR_RISE = 12
IP_IGBT_RISE = 13
IP_LIMITER_BAND = 14
IP_SIZE = 15

# pack state layout
PK_SOC = 0
PK_CURRENT = 1
PK_V_TERM = 2
PK_TEMP = 3
PK_CHARGE_AH = 4
PK_ENERGY_WH = 5
PK_STORED_DROP_WH = 6
PK_OHMIC_WH = 7
PK_OVERCURRENT_S = 8
PK_UNDERVOLT = 9
PK_SIZE = 10

# pack parameter vector
PP_Q_AH = 0
PP_SERIES = 1
PP_OCV_EMPTY = 2
PP_OCV_FULL = 3
PP_R_PACK = 4
PP_C_TH = 5
PP_R_TH = 6
PP_T_AMB = 7
PP_LOSS_SHARE = 8
PP_CONT_LIMIT = 9
PP_SIZE = 10


def extract_bits(payload, start, length, big_endian, nbits):
    mask = (1 << length) - 1
    if big_endian:
        return (payload >> (nbits - start - length)) & mask
    return (payload >> start) & mask


def insert_bits(payload, start, length, big_endian, nbits, raw):
    mask = (1 << length) - 1
    shift = nbits - start - length if big_endian else start
    return (payload & ~(mask << shift)) | ((raw & mask) << shift)


def envelope_torque(speed_rpm, vdc, t_max, p_max, v_ref, n_max):
    if speed_rpm > n_max or vdc <= 0.0:
        return 0.0
    omega = speed_rpm * RPM_TO_RAD
    if omega <= 0.0:
        return t_max
    t = (p_max * vdc / v_ref) / omega
    if t < t_max:
        return t
    return t_max


def thermal_factor(motor_t, igbt_t, motor_limit, igbt_limit, band):
    f = 1.0
    if motor_t > motor_limit - band:
        f = (motor_limit - motor_t) / band
    if igbt_t > igbt_limit - band:
        g = (igbt_limit - igbt_t) / band
        if g < f:
            f = g
    if f < 0.0:
        f = 0.0
    return f


def peak_window_step(timer, exhausted, torque, t_rated, window, dt):
    """Return (timer, exhausted) after one step at the given applied torque."""
    if torque > t_rated + EPS_T:
        timer = timer + dt
        if timer >= window - EPS_T:
            timer = window
            exhausted = 1.0
    else:
        timer = timer - dt
        if timer <= EPS_T:
            timer = 0.0
            exhausted = 0.0
    return timer, exhausted


def inverter_tick(inv, setpoint, power_limit, speed_rpm, vdc, hv_on, dt, p):
    """Step all four drive units once; returns the summed DC power in W."""
    omega = speed_rpm * RPM_TO_RAD
    t_rated = p[IP_T_RATED]
    eta = p[IP_ETA]
    n_max = p[IP_N_MAX]
    total = 0.0
    for i in range(4):
        b = i * INV_STRIDE
        env = envelope_torque(speed_rpm, vdc, p[IP_T_MAX], p[IP_P_MAX], p[IP_V_REF], n_max)
        if inv[b + INV_EXHAUSTED] > 0.5 and env > t_rated:
            env = t_rated
        f = thermal_factor(inv[b + INV_MOTOR_T], inv[b + INV_IGBT_T],
                           p[IP_MOTOR_LIMIT], p[IP_IGBT_LIMIT], p[IP_BAND])
        if f < 1.0:
            if env > t_rated:
                env = t_rated
            env = env * f
        if not hv_on:
            env = 0.0
        t = setpoint[i]
        if t < 0.0:
            t = 0.0
        if t > env:
            t = env
        if omega > 0.0:
            t_pow = power_limit[i] * eta / omega
            if t > t_pow:
                t = t_pow
        band = p[IP_LIMITER_BAND]
        if band > 0.0 and speed_rpm > n_max - band:
            g = (n_max - speed_rpm) / band
            if g < 0.0:
                g = 0.0
            t = t * g
        pm = t * omega
        pdc = pm / eta
        timer, ex = peak_window_step(inv[b + INV_TIMER], inv[b + INV_EXHAUSTED], t,
                                     t_rated, p[IP_WINDOW], dt)
        load = t / t_rated
        load = load * load
        tm = inv[b + INV_MOTOR_T]
        ti = inv[b + INV_IGBT_T]
        tm = tm + (p[IP_T_AMB] + p[IP_MOTOR_RISE] * load - tm) * dt / p[IP_TAU]
        ti = ti + (p[IP_T_AMB] + p[IP_IGBT_RISE] * load - ti) * dt / p[IP_TAU]
        inv[b + INV_TIMER] = timer
        inv[b + INV_EXHAUSTED] = ex
        inv[b + INV_MOTOR_T] = tm
        inv[b + INV_IGBT_T] = ti
        inv[b + INV_TORQUE] = t
        inv[b + INV_P_DC] = pdc
        inv[b + INV_P_MECH] = pm
        inv[b + INV_ENVELOPE] = env
        total = total + pdc
    return total


def power_cap_factor(torques, omegas, eta, cap):
    total = 0.0
    for i in range(len(torques)):
        total = total + torques[i] * omegas[i] / eta
    if total <= cap:
        return 1.0
    return cap / total


def ocv_cell(soc, ocv_empty, ocv_full):
    return ocv_empty + (ocv_full - ocv_empty) * soc


def stored_energy_wh(soc, q_ah, series, ocv_empty, ocv_full):
    # integral of the linear open-circuit curve from SoC 0 to soc
    return q_ah * series * (ocv_empty * soc + (ocv_full - ocv_empty) * soc * soc * 0.5)


def current_for_power(p_w, ocv_v, r):
    """Pack current drawing p_w at the terminals: solves (ocv - I r) I = p."""
    if p_w == 0.0:
        return 0.0
    if r <= 0.0:
        return p_w / ocv_v
    disc = ocv_v * ocv_v - 4.0 * r * p_w
    if disc < 0.0:
        disc = 0.0
    return 2.0 * p_w / (ocv_v + sqrt(disc))


def pack_step(pk, current, dt, p):
    """Advance the pack one step with a given current (A, positive = discharge)."""
    q = p[PP_Q_AH]
    series = p[PP_SERIES]
    oe = p[PP_OCV_EMPTY]
    of = p[PP_OCV_FULL]
    r = p[PP_R_PACK]
    soc = pk[PK_SOC]
    v_start = ocv_cell(soc, oe, of) * series - current * r
    soc_new = soc - current * dt / (q * 3600.0)
    if soc_new <= 0.0:
        soc_new = 0.0
        pk[PK_UNDERVOLT] = 1.0
    if soc_new > 1.0:
        soc_new = 1.0
    ploss = r * current * current
    pk[PK_STORED_DROP_WH] = pk[PK_STORED_DROP_WH] + (
        stored_energy_wh(soc, q, series, oe, of) - stored_energy_wh(soc_new, q, series, oe, of))
    pk[PK_ENERGY_WH] = pk[PK_ENERGY_WH] + v_start * current * dt / 3600.0
    pk[PK_OHMIC_WH] = pk[PK_OHMIC_WH] + ploss * dt / 3600.0
    pk[PK_CHARGE_AH] = pk[PK_CHARGE_AH] + current * dt / 3600.0
    temp = pk[PK_TEMP]
    c_th = p[PP_C_TH]
    temp = temp + (ploss * p[PP_LOSS_SHARE] / c_th - (temp - p[PP_T_AMB]) / (p[PP_R_TH] * c_th)) * dt
    pk[PK_TEMP] = temp
    if abs(current) > p[PP_CONT_LIMIT]:
        pk[PK_OVERCURRENT_S] = pk[PK_OVERCURRENT_S] + dt
    else:
        pk[PK_OVERCURRENT_S] = 0.0
    pk[PK_SOC] = soc_new
    pk[PK_CURRENT] = current
    pk[PK_V_TERM] = ocv_cell(soc_new, oe, of) * series - current * r


def vehicle_step(v, torque_sum, brake_bar, dt, mass, radius, ratio, cda, rho, brake_gain):
    """Return (v_new, motor_rpm) for the longitudinal point-mass model."""
    f_t = torque_sum * ratio / radius
    f_d = 0.5 * rho * cda * v * v
    f_b = brake_gain * brake_bar if v > 0.0 else 0.0
    a = (f_t - f_d - f_b) / mass
    v_new = v + a * dt
    if v_new < 0.0:
        v_new = 0.0
    return v_new, v_new / radius * ratio * 30.0 / pi


def rc_step(v, target, dt, tau):
    return target + (v - target) * exp(-dt / tau)
