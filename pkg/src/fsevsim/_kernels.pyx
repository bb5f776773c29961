# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-tick kernels; mirrors ``_kernels_py`` operation for operation."""

from libc.math cimport exp, sqrt, fabs

cdef double PI = 3.141592653589793
cdef double RPM_TO_RAD_C = PI / 30.0
cdef double EPS_T = 1e-9

RPM_TO_RAD = RPM_TO_RAD_C

cdef enum:
    INV_TIMER = 0
    INV_EXHAUSTED = 1
    INV_MOTOR_T = 2
    INV_IGBT_T = 3
    INV_TORQUE = 4
    INV_P_DC = 5
    INV_P_MECH = 6
    INV_ENVELOPE = 7
    INV_STRIDE = 8

cdef enum:
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

cdef enum:
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

cdef enum:
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


cpdef unsigned long long extract_bits(unsigned long long payload, int start, int length,
                                      bint big_endian, int nbits):
    cdef unsigned long long mask = 0xFFFFFFFFFFFFFFFFULL if length >= 64 else ((1ULL << length) - 1ULL)
    if big_endian:
        return (payload >> (nbits - start - length)) & mask
    return (payload >> start) & mask


cpdef unsigned long long insert_bits(unsigned long long payload, int start, int length,
                                     bint big_endian, int nbits, unsigned long long raw):
    cdef unsigned long long mask = 0xFFFFFFFFFFFFFFFFULL if length >= 64 else ((1ULL << length) - 1ULL)
    cdef int shift = nbits - start - length if big_endian else start
    return (payload & ~(mask << shift)) | ((raw & mask) << shift)


cpdef double envelope_torque(double speed_rpm, double vdc, double t_max, double p_max,
                             double v_ref, double n_max):
    cdef double omega, t
    if speed_rpm > n_max or vdc <= 0.0:
        return 0.0
    omega = speed_rpm * RPM_TO_RAD_C
    if omega <= 0.0:
        return t_max
    t = (p_max * vdc / v_ref) / omega
    if t < t_max:
        return t
    return t_max


cpdef double thermal_factor(double motor_t, double igbt_t, double motor_limit,
                            double igbt_limit, double band):
    cdef double f = 1.0, g
    if motor_t > motor_limit - band:
        f = (motor_limit - motor_t) / band
    if igbt_t > igbt_limit - band:
        g = (igbt_limit - igbt_t) / band
        if g < f:
            f = g
    if f < 0.0:
        f = 0.0
    return f


cpdef tuple peak_window_step(double timer, double exhausted, double torque, double t_rated,
                             double window, double dt):
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


cpdef double inverter_tick(double[::1] inv, double[::1] setpoint, double[::1] power_limit,
                           double speed_rpm, double vdc, bint hv_on, double dt,
                           double[::1] p):
    cdef double omega = speed_rpm * RPM_TO_RAD_C
    cdef double t_rated = p[IP_T_RATED]
    cdef double eta = p[IP_ETA]
    cdef double n_max = p[IP_N_MAX]
    cdef double total = 0.0
    cdef double env, f, t, t_pow, band, g, pm, pdc, timer, ex, load, tm, ti
    cdef int i, b
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
        timer = inv[b + INV_TIMER]
        ex = inv[b + INV_EXHAUSTED]
        if t > t_rated + EPS_T:
            timer = timer + dt
            if timer >= p[IP_WINDOW] - EPS_T:
                timer = p[IP_WINDOW]
                ex = 1.0
        else:
            timer = timer - dt
            if timer <= EPS_T:
                timer = 0.0
                ex = 0.0
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


def power_cap_factor(torques, omegas, double eta, double cap):
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(len(torques)):
        total = total + <double>torques[i] * <double>omegas[i] / eta
    if total <= cap:
        return 1.0
    return cap / total


cpdef double ocv_cell(double soc, double ocv_empty, double ocv_full):
    return ocv_empty + (ocv_full - ocv_empty) * soc


cpdef double stored_energy_wh(double soc, double q_ah, double series, double ocv_empty,
                              double ocv_full):
    return q_ah * series * (ocv_empty * soc + (ocv_full - ocv_empty) * soc * soc * 0.5)


cpdef double current_for_power(double p_w, double ocv_v, double r):
    cdef double disc
    if p_w == 0.0:
        return 0.0
    if r <= 0.0:
        return p_w / ocv_v
    disc = ocv_v * ocv_v - 4.0 * r * p_w
    if disc < 0.0:
        disc = 0.0
    return 2.0 * p_w / (ocv_v + sqrt(disc))


cpdef void pack_step(double[::1] pk, double current, double dt, double[::1] p):
    cdef double q = p[PP_Q_AH]
    cdef double series = p[PP_SERIES]
    cdef double oe = p[PP_OCV_EMPTY]
    cdef double of = p[PP_OCV_FULL]
    cdef double r = p[PP_R_PACK]
    cdef double soc = pk[PK_SOC]
    cdef double v_start = ocv_cell(soc, oe, of) * series - current * r
    cdef double soc_new = soc - current * dt / (q * 3600.0)
    cdef double ploss, temp, c_th
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
    if fabs(current) > p[PP_CONT_LIMIT]:
        pk[PK_OVERCURRENT_S] = pk[PK_OVERCURRENT_S] + dt
    else:
        pk[PK_OVERCURRENT_S] = 0.0
    pk[PK_SOC] = soc_new
    pk[PK_CURRENT] = current
    pk[PK_V_TERM] = ocv_cell(soc_new, oe, of) * series - current * r


cpdef tuple vehicle_step(double v, double torque_sum, double brake_bar, double dt, double mass,
                         double radius, double ratio, double cda, double rho, double brake_gain):
    cdef double f_t = torque_sum * ratio / radius
    cdef double f_d = 0.5 * rho * cda * v * v
    cdef double f_b = brake_gain * brake_bar if v > 0.0 else 0.0
    cdef double a = (f_t - f_d - f_b) / mass
    cdef double v_new = v + a * dt
    if v_new < 0.0:
        v_new = 0.0
    return v_new, v_new / radius * ratio * 30.0 / PI


cpdef double rc_step(double v, double target, double dt, double tau):
    return target + (v - target) * exp(-dt / tau)
